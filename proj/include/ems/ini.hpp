#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ems {

// Minimal INI dialect: [section] headers, key = value lines, '#' or ';'
// comments. Order-preserving so rewrites keep the user's layout.
struct IniSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
};

struct IniFile {
    std::vector<IniSection> sections;

    static IniFile parse(const std::string& text);
    static IniFile parse_file(const std::filesystem::path& path);

    const IniSection* find(const std::string& name) const;
    IniSection* find(const std::string& name);
    IniSection& get_or_create(const std::string& name);

    std::string serialize() const;
};

std::string trim(const std::string& s);

} // namespace ems
