#include "ems/fs_util.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>

#include "ems/errors.hpp"

namespace ems {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(errc::io_failure, "cannot open " + path.string());
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        raise(errc::io_failure, "read failed for " + path.string());
    }
    return content;
}

void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(errc::io_failure, "cannot open " + path.string() + " for writing");
    }
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) {
        raise(errc::io_failure, "write failed for " + path.string());
    }
}

void atomic_write_file(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    write_file(tmp, content);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        raise(errc::io_failure, "rename to " + path.string() + " failed");
    }
}

std::vector<std::string> list_files(const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::exists(root)) {
        return out;
    }
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            out.push_back(fs::relative(entry.path(), root).generic_string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

FileTree read_tree(const fs::path& root) {
    FileTree tree;
    for (const auto& rel : list_files(root)) {
        tree[rel] = read_file(root / rel);
    }
    return tree;
}

void write_tree(const fs::path& root, const FileTree& tree) {
    fs::create_directories(root);
    for (const auto& [rel, content] : tree) {
        write_file(root / rel, content);
    }
}

void copy_tree_over(const fs::path& from, const fs::path& to) {
    std::error_code ec;
    fs::create_directories(to, ec);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing, ec);
    if (ec) {
        raise(errc::io_failure, "copy " + from.string() + " -> " + to.string() + ": " + ec.message());
    }
}

} // namespace ems
