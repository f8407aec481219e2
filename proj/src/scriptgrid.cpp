#include "ems/scriptgrid.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ems/errors.hpp"

namespace ems {

using nlohmann::json;

GridValue GridValue::of_int(std::int64_t v) {
    GridValue g;
    g.kind = Kind::integer;
    g.int_value = v;
    g.token = std::to_string(v);
    return g;
}

GridValue GridValue::of_real(double v, std::string token) {
    GridValue g;
    g.kind = Kind::real;
    g.real_value = v;
    g.token = std::move(token);
    return g;
}

GridValue GridValue::of_text(std::string v, std::string token) {
    GridValue g;
    g.kind = Kind::text;
    g.text_value = std::move(v);
    g.token = std::move(token);
    return g;
}

bool GridValue::operator==(const GridValue& o) const {
    if (kind != o.kind) {
        return false;
    }
    switch (kind) {
    case Kind::integer: return int_value == o.int_value;
    case Kind::real: return real_value == o.real_value;
    case Kind::text: return text_value == o.text_value;
    }
    return false;
}

std::size_t RangeExpr::length() const {
    if (kind == Kind::explicit_list) {
        return values.size();
    }
    if (step > 0) {
        if (stop <= start) {
            return 0;
        }
        return std::size_t((stop - start + step - 1) / step);
    }
    if (stop >= start) {
        return 0;
    }
    return std::size_t((start - stop + (-step) - 1) / (-step));
}

GridValue RangeExpr::at(std::size_t i) const {
    if (kind == Kind::explicit_list) {
        return values.at(i);
    }
    return GridValue::of_int(start + std::int64_t(i) * step);
}

std::size_t LoopNest::grid_size() const {
    std::size_t n = 1;
    for (const auto& h : headers) {
        n *= h.range.length();
    }
    return n;
}

namespace {

struct Lines {
    std::vector<std::string> lines;
    bool trailing_newline = true;
};

Lines split_lines(const std::string& text) {
    Lines out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            if (pos < text.size()) {
                out.lines.push_back(text.substr(pos));
                out.trailing_newline = false;
            } else {
                out.trailing_newline = !text.empty();
            }
            break;
        }
        out.lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

std::string leading_ws(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
        ++i;
    }
    return line.substr(0, i);
}

bool is_blank(const std::string& line) {
    return leading_ws(line).size() == line.size();
}

// Strips a trailing comment introduced by `marker` outside quotes.
std::string strip_comment(const std::string& line, char marker) {
    bool in_single = false, in_double = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '\'' && !in_double) {
            in_single = !in_single;
        } else if (c == '"' && !in_single) {
            in_double = !in_double;
        } else if (c == marker && !in_single && !in_double) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string rtrim(const std::string& s) {
    std::size_t e = s.find_last_not_of(" \t\r");
    return e == std::string::npos ? "" : s.substr(0, e + 1);
}

bool is_ident(const std::string& s) {
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')) {
        return false;
    }
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
            return false;
        }
    }
    return true;
}

std::optional<std::int64_t> parse_int_literal(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    std::int64_t value = 0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (*begin == '+') {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return value;
}

std::int64_t require_int_literal(const std::string& text, const std::string& range_source) {
    auto v = parse_int_literal(text);
    if (!v) {
        raise(errc::unsupported_range,
              "range bound '" + trim(text) + "' in '" + range_source + "' is not a literal integer");
    }
    return *v;
}

std::vector<std::string> split_top_level(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    bool in_single = false, in_double = false;
    for (char c : text) {
        if (c == '\'' && !in_double) {
            in_single = !in_single;
        } else if (c == '"' && !in_single) {
            in_double = !in_double;
        }
        if (c == sep && !in_single && !in_double) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

GridValue parse_list_literal(const std::string& raw, const std::string& range_source) {
    std::string t = trim(raw);
    if (t.size() >= 2 && ((t.front() == '\'' && t.back() == '\'') || (t.front() == '"' && t.back() == '"'))) {
        return GridValue::of_text(t.substr(1, t.size() - 2), t);
    }
    if (auto i = parse_int_literal(t)) {
        GridValue g = GridValue::of_int(*i);
        g.token = t;
        return g;
    }
    char* endp = nullptr;
    double d = std::strtod(t.c_str(), &endp);
    if (endp != nullptr && *endp == '\0' && !t.empty()) {
        return GridValue::of_real(d, t);
    }
    raise(errc::unsupported_range, "list element '" + t + "' in '" + range_source + "' is not a literal");
}

RangeExpr parse_range_expr(const std::string& raw) {
    RangeExpr r;
    std::string text = trim(raw);
    r.source = text;
    if (text.rfind("range(", 0) == 0 && text.back() == ')') {
        std::string inner = text.substr(6, text.size() - 7);
        auto parts = split_top_level(inner, ',');
        if (parts.size() < 1 || parts.size() > 3) {
            raise(errc::unsupported_range, "range() takes 1..3 arguments: " + text);
        }
        if (parts.size() == 1) {
            r.start = 0;
            r.stop = require_int_literal(parts[0], text);
            r.step = 1;
        } else {
            r.start = require_int_literal(parts[0], text);
            r.stop = require_int_literal(parts[1], text);
            r.step = parts.size() == 3 ? require_int_literal(parts[2], text) : 1;
        }
        if (r.step == 0) {
            raise(errc::unsupported_range, "range step must be nonzero: " + text);
        }
        return r;
    }
    if (!text.empty() && text.front() == '[' && text.back() == ']') {
        r.kind = RangeExpr::Kind::explicit_list;
        std::string inner = trim(text.substr(1, text.size() - 2));
        if (!inner.empty()) {
            for (const auto& part : split_top_level(inner, ',')) {
                r.values.push_back(parse_list_literal(part, text));
            }
        }
        return r;
    }
    auto parts = split_top_level(text, ':');
    if (parts.size() == 2 || parts.size() == 3) {
        std::int64_t a = require_int_literal(parts[0], text);
        std::int64_t b = require_int_literal(parts.back(), text);
        std::int64_t step = parts.size() == 3 ? require_int_literal(parts[1], text) : 1;
        if (step == 0) {
            raise(errc::unsupported_range, "range step must be nonzero: " + text);
        }
        // a:b and a:c:b include the upper bound; widen to half-open.
        r.start = a;
        r.stop = step > 0 ? b + 1 : b - 1;
        r.step = step;
        return r;
    }
    raise(errc::unsupported_range, "'" + text + "' is not a recognized literal range");
}

struct HeaderMatch {
    std::string indent;
    std::string variable;
    std::string range_text;
    LoopForm form;
};

std::optional<HeaderMatch> match_colon_header(const std::string& raw_line) {
    std::string line = rtrim(strip_comment(raw_line, '#'));
    std::string indent = leading_ws(line);
    std::string rest = line.substr(indent.size());
    if (rest.rfind("for", 0) != 0) {
        return std::nullopt;
    }
    rest = rest.substr(3);
    if (rest.empty() || (rest[0] != ' ' && rest[0] != '\t')) {
        return std::nullopt;
    }
    if (rest.back() != ':') {
        return std::nullopt;
    }
    rest = rest.substr(0, rest.size() - 1);
    std::size_t in_pos = rest.find(" in ");
    if (in_pos == std::string::npos) {
        return std::nullopt;
    }
    std::string var = trim(rest.substr(0, in_pos));
    std::string range_text = trim(rest.substr(in_pos + 4));
    if (!is_ident(var) || range_text.empty()) {
        return std::nullopt;
    }
    return HeaderMatch{indent, var, range_text, LoopForm::colon};
}

std::optional<HeaderMatch> match_equals_header(const std::string& raw_line) {
    std::string line = rtrim(strip_comment(raw_line, '%'));
    std::string indent = leading_ws(line);
    std::string rest = line.substr(indent.size());
    if (rest.rfind("for", 0) != 0) {
        return std::nullopt;
    }
    rest = rest.substr(3);
    if (rest.empty() || (rest[0] != ' ' && rest[0] != '\t')) {
        return std::nullopt;
    }
    std::size_t eq = rest.find('=');
    if (eq == std::string::npos) {
        return std::nullopt;
    }
    std::string var = trim(rest.substr(0, eq));
    std::string range_text = trim(rest.substr(eq + 1));
    if (!is_ident(var) || range_text.empty()) {
        return std::nullopt;
    }
    return HeaderMatch{indent, var, range_text, LoopForm::equals};
}

std::optional<HeaderMatch> match_header(const std::string& line) {
    if (auto m = match_colon_header(line)) {
        return m;
    }
    return match_equals_header(line);
}

bool is_end_line(const std::string& raw_line) {
    std::string line = trim(strip_comment(raw_line, '%'));
    while (!line.empty() && line.back() == ';') {
        line = rtrim(line.substr(0, line.size() - 1));
    }
    return line == "end";
}

// Keywords whose blocks are closed by `end` in the equals-form dialect.
bool opens_end_block(const std::string& raw_line) {
    std::string line = trim(strip_comment(raw_line, '%'));
    for (const char* kw : {"for", "parfor", "while", "if", "switch", "function"}) {
        std::size_t n = std::strlen(kw);
        if (line.rfind(kw, 0) == 0 && (line.size() == n || !std::isalnum(static_cast<unsigned char>(line[n])))) {
            return true;
        }
    }
    return false;
}

// Extent of a loop: [body_first, body_last] plus the index one past the
// whole construct (past `end` for equals-form).
struct LoopExtent {
    std::size_t body_first;
    std::size_t body_last; // inclusive; body_first > body_last means empty
    std::size_t past_end;
};

LoopExtent colon_extent(const std::vector<std::string>& lines, std::size_t header_idx,
                        const std::string& header_indent) {
    std::size_t i = header_idx + 1;
    std::size_t last_nonblank = header_idx;
    while (i < lines.size()) {
        if (is_blank(lines[i])) {
            ++i;
            continue;
        }
        if (leading_ws(lines[i]).size() <= header_indent.size()) {
            break;
        }
        last_nonblank = i;
        ++i;
    }
    if (last_nonblank == header_idx) {
        raise(errc::malformed_loop,
              "loop at line " + std::to_string(header_idx + 1) + " has an empty body");
    }
    return {header_idx + 1, last_nonblank, last_nonblank + 1};
}

LoopExtent equals_extent(const std::vector<std::string>& lines, std::size_t header_idx) {
    int depth = 0;
    for (std::size_t i = header_idx + 1; i < lines.size(); ++i) {
        if (is_end_line(lines[i])) {
            if (depth == 0) {
                if (i == header_idx + 1) {
                    raise(errc::malformed_loop,
                          "loop at line " + std::to_string(header_idx + 1) + " has an empty body");
                }
                return {header_idx + 1, i - 1, i + 1};
            }
            --depth;
        } else if (opens_end_block(lines[i])) {
            ++depth;
        }
    }
    raise(errc::malformed_loop,
          "loop at line " + std::to_string(header_idx + 1) + " is not closed by 'end'");
}

std::size_t first_nonblank(const std::vector<std::string>& lines, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i <= to && i < lines.size(); ++i) {
        if (!is_blank(lines[i])) {
            return i;
        }
    }
    return to + 1;
}

} // namespace

LoopNest parse_loops(const std::string& script) {
    if (script.empty()) {
        raise(errc::no_parallel_loop, "script is empty");
    }
    auto [lines, trailing_newline] = split_lines(script);

    std::size_t outer = 0;
    std::optional<HeaderMatch> outer_match;
    for (; outer < lines.size(); ++outer) {
        if ((outer_match = match_header(lines[outer]))) {
            break;
        }
    }
    if (!outer_match) {
        raise(errc::no_parallel_loop, "no recognizable for loop in script");
    }

    LoopNest nest;
    nest.trailing_newline = trailing_newline;
    nest.preamble.assign(lines.begin(), lines.begin() + std::ptrdiff_t(outer));

    std::size_t header_idx = outer;
    HeaderMatch match = *outer_match;
    std::size_t past_construct = 0;
    std::pair<std::size_t, std::size_t> body{0, 0};
    while (true) {
        LoopExtent extent = match.form == LoopForm::colon
                                ? colon_extent(lines, header_idx, match.indent)
                                : equals_extent(lines, header_idx);
        LoopHeader header;
        header.variable = match.variable;
        header.range = parse_range_expr(match.range_text);
        header.form = match.form;
        header.header_line = header_idx;
        header.body_span = {extent.body_first, extent.body_last};
        header.indent = match.indent;
        nest.headers.push_back(header);

        if (nest.headers.size() == 1) {
            past_construct = extent.past_end;
        }
        body = {extent.body_first, extent.body_last};

        // Descend while the body is exactly one nested loop (perfect nest).
        std::size_t inner = first_nonblank(lines, extent.body_first, extent.body_last);
        if (inner > extent.body_last) {
            break;
        }
        auto inner_match = match_header(lines[inner]);
        if (!inner_match) {
            break;
        }
        LoopExtent inner_extent = inner_match->form == LoopForm::colon
                                      ? colon_extent(lines, inner, inner_match->indent)
                                      : equals_extent(lines, inner);
        std::size_t tail = inner_extent.past_end <= extent.body_last
                               ? first_nonblank(lines, inner_extent.past_end, extent.body_last)
                               : extent.body_last + 1;
        bool covers_body = inner_extent.body_last <= extent.body_last && tail > extent.body_last;
        if (!covers_body) {
            break;
        }
        header_idx = inner;
        match = *inner_match;
    }

    nest.body.assign(lines.begin() + std::ptrdiff_t(body.first),
                     lines.begin() + std::ptrdiff_t(body.second) + 1);
    std::size_t fb = first_nonblank(lines, body.first, body.second);
    nest.body_indent = fb <= body.second ? leading_ws(lines[fb]) : nest.headers.back().indent;
    nest.epilogue.assign(lines.begin() + std::ptrdiff_t(past_construct), lines.end());

    for (std::size_t i = 0; i < nest.epilogue.size(); ++i) {
        if (match_header(nest.epilogue[i])) {
            nest.warnings.push_back("additional loop at line " +
                                    std::to_string(past_construct + i + 1) +
                                    " is not parallelized; only the first loop nest is split");
            break;
        }
    }
    return nest;
}

std::vector<Assignment> expand_grid(const LoopNest& nest) {
    for (const auto& h : nest.headers) {
        if (h.range.length() == 0) {
            raise(errc::empty_grid, "range of '" + h.variable + "' (" + h.range.source + ") is empty");
        }
    }
    std::size_t total = nest.grid_size();
    std::vector<Assignment> out;
    out.reserve(total);
    std::vector<std::size_t> idx(nest.headers.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        Assignment a;
        a.reserve(nest.headers.size());
        for (std::size_t d = 0; d < nest.headers.size(); ++d) {
            a.emplace_back(nest.headers[d].variable, nest.headers[d].range.at(idx[d]));
        }
        out.push_back(std::move(a));
        // Odometer, innermost digit fastest (row-major).
        for (std::size_t d = nest.headers.size(); d-- > 0;) {
            if (++idx[d] < nest.headers[d].range.length()) {
                break;
            }
            idx[d] = 0;
        }
    }
    return out;
}

namespace {

char comment_marker(const LoopNest& nest) {
    return nest.headers.front().form == LoopForm::colon ? '#' : '%';
}

void append_bindings_and_body(std::vector<std::string>& out, const LoopNest& nest,
                              const Assignment& assignment) {
    const std::string& outer_indent = nest.headers.front().indent;
    for (const auto& [var, value] : assignment) {
        out.push_back(outer_indent + var + " = " + value.token);
    }
    bool dedent = nest.headers.front().form == LoopForm::colon;
    std::size_t strip = dedent && nest.body_indent.size() > outer_indent.size()
                            ? nest.body_indent.size() - outer_indent.size()
                            : 0;
    for (const auto& line : nest.body) {
        if (is_blank(line)) {
            out.push_back(line);
            continue;
        }
        std::size_t ws = leading_ws(line).size();
        out.push_back(line.substr(std::min(strip, ws)));
    }
}

std::string join_lines(const std::vector<std::string>& lines, bool trailing_newline) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (i + 1 < lines.size() || trailing_newline) {
            out += '\n';
        }
    }
    return out;
}

} // namespace

std::string rewrite_script(const std::string& script, const LoopNest& nest,
                           const Assignment& assignment, std::uint64_t seed) {
    (void)script; // the nest already carries every line
    char marker = comment_marker(nest);
    std::vector<std::string> out;
    out.push_back(std::string(1, marker) + " ems: per-job seed binding");
    out.push_back("EMS_SEED = " + std::to_string(seed));
    out.insert(out.end(), nest.preamble.begin(), nest.preamble.end());
    append_bindings_and_body(out, nest, assignment);
    out.insert(out.end(), nest.epilogue.begin(), nest.epilogue.end());
    return join_lines(out, nest.trailing_newline);
}

std::string rewrite_script_chunk(const std::string& script, const LoopNest& nest,
                                 std::span<const Assignment> points, std::uint64_t seed) {
    if (points.size() == 1) {
        return rewrite_script(script, nest, points.front(), seed);
    }
    char marker = comment_marker(nest);
    std::vector<std::string> out;
    out.push_back(std::string(1, marker) + " ems: per-job seed binding");
    out.push_back("EMS_SEED = " + std::to_string(seed));
    out.insert(out.end(), nest.preamble.begin(), nest.preamble.end());
    for (const Assignment& point : points) {
        std::string label = std::string(1, marker) + " ems: grid point";
        for (const auto& [var, value] : point) {
            label += " " + var + "=" + value.token;
        }
        out.push_back(label);
        append_bindings_and_body(out, nest, point);
    }
    out.insert(out.end(), nest.epilogue.begin(), nest.epilogue.end());
    return join_lines(out, nest.trailing_newline);
}

namespace {

json grid_value_json(const GridValue& v) {
    switch (v.kind) {
    case GridValue::Kind::integer: return v.int_value;
    case GridValue::Kind::real: return v.real_value;
    case GridValue::Kind::text: return v.text_value;
    }
    return nullptr;
}

json assignment_json(const Assignment& a) {
    json j = json::object();
    for (const auto& [var, value] : a) {
        j[var] = grid_value_json(value);
    }
    return j;
}

} // namespace

std::vector<TaskSpec> split_jobs(const ExperimentPackage& pkg, const fs::path& package_dir,
                                 const SplitOptions& options) {
    if (!pkg.pid.valid()) {
        raise(errc::io_failure, "package has no PID");
    }
    options.resources.validate();
    if (options.chunk < 1) {
        raise(errc::invalid_job_count, "--chunk must be >= 1");
    }
    LoopNest nest = parse_loops(pkg.script);
    std::vector<Assignment> grid = expand_grid(nest);
    std::size_t n_jobs = (grid.size() + std::size_t(options.chunk) - 1) / std::size_t(options.chunk);
    SeedSet seeds = derive_seeds(pkg.pid, n_jobs);

    std::vector<TaskSpec> tasks;
    tasks.reserve(n_jobs);
    for (std::size_t k = 0; k < n_jobs; ++k) {
        std::size_t begin = k * std::size_t(options.chunk);
        std::size_t end = std::min(grid.size(), begin + std::size_t(options.chunk));
        std::span<const Assignment> points(grid.data() + begin, end - begin);

        TaskSpec task;
        task.job_index = int(k);
        task.assignment = points.front();
        task.points.assign(points.begin(), points.end());
        task.seed = seeds.per_job[k];
        task.script_text = rewrite_script_chunk(pkg.script, nest, points, task.seed);
        task.resources = options.resources;
        task.command = options.interpreter;
        task.command.push_back("run_script");
        task.workdir = package_dir / "jobs" / std::to_string(k);
        task.pid = pkg.pid.hex;

        write_file(task.workdir / "run_script", task.script_text);
        json meta;
        meta["job_index"] = task.job_index;
        meta["seed"] = task.seed;
        if (task.points.size() == 1) {
            meta["assignment"] = assignment_json(task.assignment);
        } else {
            json pts = json::array();
            for (const auto& p : task.points) {
                pts.push_back(assignment_json(p));
            }
            meta["points"] = pts;
        }
        atomic_write_file(task.workdir / "assignment.json", meta.dump(2) + "\n");
        // Working copy of the declared deps; jobs must not share writable files.
        for (const auto& [path, content] : pkg.deps) {
            write_file(task.workdir / normalize_dep_path(path), content);
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

} // namespace ems
