#pragma once

#include <string>
#include <vector>

#include "ems/bundlegraph.hpp"

namespace ems {

// One item per line in the .ws source:
//   % some text        -> text block (verbatim, marker stripped)
//   {bundle-ref}       -> bundle reference (id or unique prefix)
//   %% schema col ...  -> table schema for subsequent bundle rows
struct WorksheetItem {
    enum class Kind { text, bundle_ref, schema };

    Kind kind = Kind::text;
    std::string text;
    std::string bundle_ref;
    std::vector<std::string> columns;
};

struct Worksheet {
    std::string name;
    std::vector<WorksheetItem> items;
};

// Columns: bundle (8-char id prefix), kind, state, command, hash.
extern const std::vector<std::string> kDefaultWorksheetColumns;

Worksheet parse_worksheet(const std::string& name, const std::string& text);

// Markdown: text verbatim, consecutive bundle refs grouped into one table
// under the active schema. Throws DanglingReference for unresolved refs.
std::string render_worksheet(const Worksheet& ws, const BundleStore& store);

} // namespace ems
