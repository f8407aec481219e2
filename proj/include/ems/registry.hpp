#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ems/backends.hpp"

namespace ems {

// One saved cluster configuration (the ssh_config-style registry).
struct ClusterRegistryEntry {
    std::string name;
    std::string host;
    Scheduler scheduler = Scheduler::slurm;
    ResourceRequest default_resources;
    std::string libs; // runtime libraries note

    bool operator==(const ClusterRegistryEntry&) const = default;
};

bool valid_host(const std::string& host);

// INI-backed registry with atomic (write-temp-rename) updates, so partial
// updates never clobber unrelated keys and concurrent writers never tear
// the file.
class ConfigRegistry {
public:
    explicit ConfigRegistry(std::filesystem::path ini_path);

    std::optional<ClusterRegistryEntry> find(const std::string& name) const;
    std::vector<ClusterRegistryEntry> all() const;

    // assignments are "key=value" tokens; only listed keys change.
    // Keys: host, scheduler, cpus, gpus, memory_gb, deployment_mb, disk_gb,
    // max_runtime_s, libs.
    ClusterRegistryEntry update(const std::string& name, const std::vector<std::string>& assignments,
                                bool create);

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace ems
