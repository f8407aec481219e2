#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ems/clock.hpp"
#include "ems/fs_util.hpp"

namespace ems {

// Content-addressed identity of an experiment package (SHA-1 hex).
struct PackageIdentifier {
    std::string hex; // 40 lowercase hex chars

    bool valid() const;
    std::string short8() const { return hex.substr(0, 8); }
    bool operator==(const PackageIdentifier&) const = default;
};

// A script plus its declared dependency tree and metadata. The PID is a pure
// function of these three fields; submit time never participates.
struct ExperimentPackage {
    std::string script;
    FileTree deps;                               // relative path -> bytes
    std::map<std::string, std::string> metadata; // message, submit options
    PackageIdentifier pid;                       // filled by package_pid
};

struct DependencyEntry {
    std::string path;
    std::string sha1;
    bool operator==(const DependencyEntry&) const = default;
};

struct ReproManifest {
    std::string pid;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> per_job_seeds;
    std::vector<DependencyEntry> dependency_list; // canonical (lexicographic) order
    std::string created_at;                       // UTC, manifest-only (not hashed)
    std::string message;
    bool operator==(const ReproManifest&) const = default;
};

struct SeedSet {
    std::uint64_t master = 0;
    std::vector<std::uint64_t> per_job;
};

// Throws InvalidPath for absolute paths, `..` segments, or paths that
// collide after normalization.
std::string normalize_dep_path(const std::string& path);

// CRLF and lone CR become LF. Applied to the main script only; binary
// deps are hashed verbatim.
std::string normalize_newlines(const std::string& text);

// Deterministic byte stream: script with line endings normalized to LF,
// then each dep as `path NUL content` in lexicographic path order, then
// metadata as `key=value LF` in lexicographic key order.
std::string canonicalize(const std::string& script, const FileTree& deps,
                         const std::map<std::string, std::string>& metadata);

PackageIdentifier compute_pid(std::string_view canonical_stream);

// canonicalize + compute_pid over the package fields.
PackageIdentifier package_pid(const ExperimentPackage& pkg);

// master = first 8 bytes of SHA-1(pid.hex), big-endian;
// per_job[i] = first 8 bytes of SHA-1(pid.hex ":" i), big-endian.
SeedSet derive_seeds(const PackageIdentifier& pid, std::size_t n_jobs);

// Materializes <root>/<pid>/script and <root>/<pid>/deps/...
fs::path store_package(const fs::path& packages_root, const ExperimentPackage& pkg);

ReproManifest write_manifest(const fs::path& package_dir, const ExperimentPackage& pkg,
                             const SeedSet& seeds, const Clock& clock);
ReproManifest read_manifest(const fs::path& package_dir);

} // namespace ems
