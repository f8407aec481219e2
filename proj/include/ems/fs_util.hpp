#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ems {

namespace fs = std::filesystem;

// Relative path -> file bytes, lexicographically ordered by path.
using FileTree = std::map<std::string, std::string>;

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);

// write-temp-rename; readers never observe a torn file.
void atomic_write_file(const fs::path& path, std::string_view content);

FileTree read_tree(const fs::path& root);
void write_tree(const fs::path& root, const FileTree& tree);

// Relative paths of regular files under root, sorted.
std::vector<std::string> list_files(const fs::path& root);

void copy_tree_over(const fs::path& from, const fs::path& to);

} // namespace ems
