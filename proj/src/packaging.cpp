#include "ems/packaging.hpp"

#include <nlohmann/json.hpp>

#include "ems/errors.hpp"
#include "ems/sha1.hpp"

namespace ems {

using nlohmann::json;

bool PackageIdentifier::valid() const {
    if (hex.size() != 40) {
        return false;
    }
    for (char c : hex) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

std::string normalize_dep_path(const std::string& path) {
    if (path.empty()) {
        raise(errc::invalid_path, "empty dependency path");
    }
    fs::path p(path);
    if (p.is_absolute()) {
        raise(errc::invalid_path, "absolute dependency path: " + path);
    }
    fs::path norm = p.lexically_normal();
    for (const auto& part : norm) {
        if (part == "..") {
            raise(errc::invalid_path, "dependency path escapes package: " + path);
        }
    }
    std::string s = norm.generic_string();
    if (s.empty() || s == ".") {
        raise(errc::invalid_path, "dependency path normalizes to nothing: " + path);
    }
    return s;
}

std::string normalize_newlines(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            out.push_back('\n');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

namespace {

FileTree normalized_deps(const FileTree& deps) {
    FileTree out;
    for (const auto& [path, content] : deps) {
        std::string norm = normalize_dep_path(path);
        auto [it, inserted] = out.emplace(norm, content);
        if (!inserted) {
            raise(errc::invalid_path, "duplicate dependency path after normalization: " + norm);
        }
    }
    return out;
}

} // namespace

std::string canonicalize(const std::string& script, const FileTree& deps,
                         const std::map<std::string, std::string>& metadata) {
    std::string stream = normalize_newlines(script);
    for (const auto& [path, content] : normalized_deps(deps)) {
        stream.append(path);
        stream.push_back('\0');
        stream.append(content); // binary deps hashed verbatim
    }
    for (const auto& [key, value] : metadata) {
        stream.append(key);
        stream.push_back('=');
        stream.append(value);
        stream.push_back('\n');
    }
    return stream;
}

PackageIdentifier compute_pid(std::string_view canonical_stream) {
    return PackageIdentifier{Sha1::hex(canonical_stream)};
}

PackageIdentifier package_pid(const ExperimentPackage& pkg) {
    return compute_pid(canonicalize(pkg.script, pkg.deps, pkg.metadata));
}

namespace {

std::uint64_t first8_big_endian(const std::array<std::uint8_t, 20>& digest) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | digest[std::size_t(i)];
    }
    return v;
}

} // namespace

SeedSet derive_seeds(const PackageIdentifier& pid, std::size_t n_jobs) {
    if (n_jobs == 0) {
        raise(errc::invalid_job_count, "a package split must contain at least one job");
    }
    SeedSet seeds;
    {
        Sha1 h;
        h.update(pid.hex);
        seeds.master = first8_big_endian(h.digest());
    }
    seeds.per_job.reserve(n_jobs);
    for (std::size_t i = 0; i < n_jobs; ++i) {
        Sha1 h;
        h.update(pid.hex);
        h.update(":");
        h.update(std::to_string(i));
        seeds.per_job.push_back(first8_big_endian(h.digest()));
    }
    return seeds;
}

fs::path store_package(const fs::path& packages_root, const ExperimentPackage& pkg) {
    if (!pkg.pid.valid()) {
        raise(errc::io_failure, "package has no PID; call package_pid first");
    }
    fs::path dir = packages_root / pkg.pid.hex;
    write_file(dir / "script", pkg.script);
    for (const auto& [path, content] : normalized_deps(pkg.deps)) {
        write_file(dir / "deps" / path, content);
    }
    return dir;
}

ReproManifest write_manifest(const fs::path& package_dir, const ExperimentPackage& pkg,
                             const SeedSet& seeds, const Clock& clock) {
    ReproManifest m;
    m.pid = pkg.pid.hex;
    m.master_seed = seeds.master;
    m.per_job_seeds = seeds.per_job;
    for (const auto& [path, content] : normalized_deps(pkg.deps)) {
        m.dependency_list.push_back({path, Sha1::hex(content)});
    }
    m.created_at = to_iso8601(clock.now());
    auto it = pkg.metadata.find("message");
    m.message = it == pkg.metadata.end() ? "" : it->second;

    json j;
    j["pid"] = m.pid;
    j["master_seed"] = m.master_seed;
    j["per_job_seeds"] = m.per_job_seeds;
    json deps = json::array();
    for (const auto& d : m.dependency_list) {
        deps.push_back({{"path", d.path}, {"sha1", d.sha1}});
    }
    j["dependency_list"] = deps;
    j["created_at"] = m.created_at;
    j["message"] = m.message;
    atomic_write_file(package_dir / "manifest.json", j.dump(2) + "\n");
    return m;
}

ReproManifest read_manifest(const fs::path& package_dir) {
    fs::path file = package_dir / "manifest.json";
    if (!fs::exists(file)) {
        raise(errc::unknown_package, "no manifest in " + package_dir.string());
    }
    json j = json::parse(read_file(file));
    ReproManifest m;
    m.pid = j.at("pid").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.per_job_seeds = j.at("per_job_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& d : j.at("dependency_list")) {
        m.dependency_list.push_back({d.at("path").get<std::string>(), d.at("sha1").get<std::string>()});
    }
    m.created_at = j.at("created_at").get<std::string>();
    m.message = j.at("message").get<std::string>();
    return m;
}

} // namespace ems
