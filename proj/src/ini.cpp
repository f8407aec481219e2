#include "ems/ini.hpp"

#include <sstream>

#include "ems/errors.hpp"
#include "ems/fs_util.hpp"

namespace ems {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<std::string> IniSection::get(const std::string& key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

void IniSection::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries.emplace_back(key, value);
}

IniFile IniFile::parse(const std::string& text) {
    IniFile file;
    IniSection* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                raise(errc::malformed_config, "unterminated section header at line " + std::to_string(lineno));
            }
            file.sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
            current = &file.sections.back();
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            raise(errc::malformed_config, "expected key=value at line " + std::to_string(lineno));
        }
        if (current == nullptr) {
            file.sections.push_back({"", {}});
            current = &file.sections.back();
        }
        current->entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return file;
}

IniFile IniFile::parse_file(const std::filesystem::path& path) {
    return parse(read_file(path));
}

const IniSection* IniFile::find(const std::string& name) const {
    for (const auto& s : sections) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

IniSection* IniFile::find(const std::string& name) {
    for (auto& s : sections) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

IniSection& IniFile::get_or_create(const std::string& name) {
    if (IniSection* s = find(name)) {
        return *s;
    }
    sections.push_back({name, {}});
    return sections.back();
}

std::string IniFile::serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& s : sections) {
        if (!first) {
            out << "\n";
        }
        first = false;
        if (!s.name.empty()) {
            out << "[" << s.name << "]\n";
        }
        for (const auto& [k, v] : s.entries) {
            out << k << " = " << v << "\n";
        }
    }
    return out.str();
}

} // namespace ems
