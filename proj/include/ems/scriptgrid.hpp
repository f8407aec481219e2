#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ems/backends.hpp"
#include "ems/packaging.hpp"

namespace ems {

// One grid coordinate value: an integer, a real, or a quoted string literal.
// `token` is the source literal, reused verbatim when rebinding variables in
// rewritten scripts.
struct GridValue {
    enum class Kind { integer, real, text };

    Kind kind = Kind::integer;
    std::int64_t int_value = 0;
    double real_value = 0.0;
    std::string text_value;
    std::string token;

    static GridValue of_int(std::int64_t v);
    static GridValue of_real(double v, std::string token);
    static GridValue of_text(std::string v, std::string token);

    bool operator==(const GridValue& o) const;
};

struct RangeExpr {
    enum class Kind { integer_range, explicit_list };

    Kind kind = Kind::integer_range;
    // Half-open after normalization; equals-form a:b / a:c:b are inclusive in
    // the source dialect and widened by one step here.
    std::int64_t start = 0;
    std::int64_t stop = 0;
    std::int64_t step = 1;
    std::vector<GridValue> values; // explicit_list
    std::string source;

    std::size_t length() const;
    GridValue at(std::size_t i) const;
};

enum class LoopForm { colon, equals };

struct LoopHeader {
    std::string variable;
    RangeExpr range;
    LoopForm form = LoopForm::colon;
    std::size_t header_line = 0;               // 0-based line of the `for`
    std::pair<std::size_t, std::size_t> body_span{0, 0}; // [first, last] body lines
    std::string indent;
};

// The outermost perfect loop nest of a script.
struct LoopNest {
    std::vector<LoopHeader> headers;      // outermost first
    std::vector<std::string> preamble;    // lines before the nest, verbatim
    std::vector<std::string> body;        // innermost body lines, original indentation
    std::vector<std::string> epilogue;    // lines after the nest, verbatim
    std::string body_indent;
    std::vector<std::string> warnings;
    bool trailing_newline = true;

    std::size_t grid_size() const;
};

using Assignment = std::vector<std::pair<std::string, GridValue>>;

// Recognizes `for <ident> in <range-expr>:` (indentation-delimited body) and
// `for <ident> = <range-expr>` ... `end`. Range expressions: range(a),
// range(a,b), range(a,b,c), a:b, a:c:b, and bracketed literal lists.
LoopNest parse_loops(const std::string& script);

// Row-major expansion, outermost variable varying slowest.
// Throws EmptyGrid when some range has length zero.
std::vector<Assignment> expand_grid(const LoopNest& nest);

// Replaces the loop headers with constant bindings, dedents the body, and
// prepends the seed-injection line. Preamble and epilogue are preserved
// byte-for-byte.
std::string rewrite_script(const std::string& script, const LoopNest& nest,
                           const Assignment& assignment, std::uint64_t seed);

// --chunk form: several consecutive grid points in one job script.
std::string rewrite_script_chunk(const std::string& script, const LoopNest& nest,
                                 std::span<const Assignment> points, std::uint64_t seed);

// One executable unit of a split package.
struct TaskSpec {
    int job_index = 0;
    Assignment assignment;               // points[0]
    std::vector<Assignment> points;      // >1 entry only when chunked
    std::string script_text;
    std::uint64_t seed = 0;
    ResourceRequest resources;
    std::vector<std::string> command;    // argv, relative to workdir
    fs::path workdir;
    std::string pid;
    std::vector<std::pair<std::string, std::string>> extra_env;
};

struct SplitOptions {
    ResourceRequest resources;
    int chunk = 1;
    std::vector<std::string> interpreter = {"python3"};
};

// One TaskSpec per grid point (or per chunk); writes jobs/<k>/run_script,
// jobs/<k>/assignment.json and a working copy of the deps under each job
// directory. Seeds come from derive_seeds(pid, n_jobs).
std::vector<TaskSpec> split_jobs(const ExperimentPackage& pkg, const fs::path& package_dir,
                                 const SplitOptions& options);

} // namespace ems
