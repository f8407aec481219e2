#include "ems/worksheet.hpp"

#include <sstream>

#include "ems/errors.hpp"
#include "ems/ini.hpp"

namespace ems {

const std::vector<std::string> kDefaultWorksheetColumns = {"bundle", "kind", "state", "command"};

Worksheet parse_worksheet(const std::string& name, const std::string& text) {
    Worksheet ws;
    ws.name = name;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::string t = trim(line);
        WorksheetItem item;
        if (t.rfind("%%", 0) == 0) {
            item.kind = WorksheetItem::Kind::schema;
            std::istringstream toks(t.substr(2));
            std::string tok;
            toks >> tok; // the word "schema"
            if (tok != "schema") {
                raise(errc::malformed_config, "expected '%% schema ...' in worksheet " + name);
            }
            while (toks >> tok) {
                item.columns.push_back(tok);
            }
            if (item.columns.empty()) {
                item.columns = kDefaultWorksheetColumns;
            }
        } else if (t.rfind('%', 0) == 0) {
            item.kind = WorksheetItem::Kind::text;
            std::string body = t.substr(1);
            if (!body.empty() && body.front() == ' ') {
                body.erase(body.begin());
            }
            item.text = body;
        } else if (t.size() >= 2 && t.front() == '{' && t.back() == '}') {
            item.kind = WorksheetItem::Kind::bundle_ref;
            item.bundle_ref = trim(t.substr(1, t.size() - 2));
        } else if (t.empty()) {
            item.kind = WorksheetItem::Kind::text;
            item.text = "";
        } else {
            // Bare lines count as text; the markers above are the only syntax.
            item.kind = WorksheetItem::Kind::text;
            item.text = line;
        }
        ws.items.push_back(std::move(item));
    }
    return ws;
}

namespace {

std::string cell_for(const Bundle& b, const std::string& column) {
    if (column == "bundle") {
        return b.bundle_id.substr(0, 8);
    }
    if (column == "kind") {
        return bundle_kind_name(b.kind);
    }
    if (column == "state") {
        return bundle_state_name(b.state);
    }
    if (column == "command") {
        return b.command;
    }
    if (column == "hash") {
        return b.contents_hash.substr(0, 8);
    }
    raise(errc::malformed_config, "unknown worksheet column '" + column + "'");
}

void open_table(std::ostringstream& out, const std::vector<std::string>& columns) {
    out << "|";
    for (const auto& c : columns) {
        out << " " << c << " |";
    }
    out << "\n|";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << " --- |";
    }
    out << "\n";
}

} // namespace

std::string render_worksheet(const Worksheet& ws, const BundleStore& store) {
    std::ostringstream out;
    std::vector<std::string> columns = kDefaultWorksheetColumns;
    bool in_table = false;
    for (const auto& item : ws.items) {
        switch (item.kind) {
        case WorksheetItem::Kind::schema:
            columns = item.columns;
            in_table = false;
            break;
        case WorksheetItem::Kind::text:
            in_table = false;
            out << item.text << "\n";
            break;
        case WorksheetItem::Kind::bundle_ref: {
            Bundle b;
            try {
                b = store.get(item.bundle_ref);
            } catch (const error&) {
                raise(errc::dangling_reference,
                      "worksheet '" + ws.name + "' references unknown bundle '" + item.bundle_ref + "'");
            }
            if (!in_table) {
                open_table(out, columns);
                in_table = true;
            }
            out << "|";
            for (const auto& c : columns) {
                out << " " << cell_for(b, c) << " |";
            }
            out << "\n";
            break;
        }
        }
    }
    return out.str();
}

} // namespace ems
