#include "ems/backends.hpp"

#include <cmath>
#include <sstream>

#include "ems/errors.hpp"
#include "ems/ini.hpp"

namespace ems {

const char* scheduler_name(Scheduler s) {
    return s == Scheduler::slurm ? "slurm" : "sge";
}

Scheduler parse_scheduler(const std::string& name) {
    if (name == "slurm") {
        return Scheduler::slurm;
    }
    if (name == "sge") {
        return Scheduler::sge;
    }
    raise(errc::malformed_config, "unknown scheduler '" + name + "' (expected slurm or sge)");
}

namespace {

constexpr double kQuantityCap = 1e6;

void check_positive(double v, const char* field) {
    if (!std::isfinite(v) || v <= 0 || v > kQuantityCap) {
        raise(errc::invalid_resource, std::string(field) + " must be in (0, 1e6], got " + std::to_string(v));
    }
}

void check_non_negative(double v, const char* field) {
    if (!std::isfinite(v) || v < 0 || v > kQuantityCap) {
        raise(errc::invalid_resource, std::string(field) + " must be in [0, 1e6], got " + std::to_string(v));
    }
}

} // namespace

void ResourceRequest::validate() const {
    check_positive(cpus, "cpus");
    check_non_negative(gpus, "gpus");
    check_positive(memory_gb, "memory_gb");
    check_positive(deployment_mb, "deployment_mb");
    check_non_negative(disk_gb, "disk_gb");
    check_positive(max_runtime_s, "max_runtime_s");
}

std::optional<double> ServerlessProfile::disk_gb_limit() const {
    if (!disk_limit_value) {
        return std::nullopt;
    }
    return disk_limit_unit == DiskUnit::mb ? *disk_limit_value / 1000.0 : *disk_limit_value;
}

const ServerlessProfile& ServerlessProfile::builtin(const std::string& name) {
    static const ServerlessProfile lambda{
        "lambda", 50.0, 3.0, 0.5, DiskUnit::gb, false, 300,
    };
    static const ServerlessProfile gcf{
        "gcf", 100.0, 2.0, std::nullopt, DiskUnit::gb, true, 540,
    };
    // Azure's disk figure is recorded verbatim (5000) with a unit flag;
    // the published table carries no unit resolution for it.
    static const ServerlessProfile azure{
        "azure", std::nullopt, 1.5, 5000.0, DiskUnit::mb, false, 600,
    };
    if (name == "lambda") {
        return lambda;
    }
    if (name == "gcf") {
        return gcf;
    }
    if (name == "azure") {
        return azure;
    }
    raise(errc::malformed_config, "unknown serverless profile '" + name + "'");
}

std::vector<std::string> ServerlessProfile::builtin_names() {
    return {"lambda", "gcf", "azure"};
}

ServerlessProfile load_profile(const std::string& name, const std::filesystem::path& ems_home) {
    ServerlessProfile p = ServerlessProfile::builtin(name);
    std::filesystem::path file = ems_home / "profiles.ini";
    if (!std::filesystem::exists(file)) {
        return p;
    }
    IniFile ini = IniFile::parse_file(file);
    const IniSection* section = ini.find(name);
    if (section == nullptr) {
        return p;
    }
    for (const auto& [key, value] : section->entries) {
        if (key == "deployment_mb") {
            if (value == "unlimited") {
                p.deployment_mb_limit = std::nullopt;
            } else {
                p.deployment_mb_limit = std::stod(value);
            }
        } else if (key == "memory_gb") {
            p.memory_gb_limit = std::stod(value);
        } else if (key == "disk") {
            if (value == "shared") {
                p.disk_limit_value = std::nullopt;
            } else {
                p.disk_limit_value = std::stod(value);
            }
        } else if (key == "disk_unit") {
            p.disk_limit_unit = value == "mb" ? ServerlessProfile::DiskUnit::mb : ServerlessProfile::DiskUnit::gb;
        } else if (key == "disk_counts_against_memory") {
            p.disk_counts_against_memory = value == "true" || value == "1";
        } else if (key == "max_runtime_s") {
            p.max_runtime_s = std::stoi(value);
        } else {
            raise(errc::malformed_config, "unknown profile key '" + key + "' in " + file.string());
        }
    }
    return p;
}

Admission admit(const ResourceRequest& req, const ServerlessProfile& profile) {
    req.validate();
    auto reject = [](std::string reason, std::string detail) {
        return Admission{false, std::move(reason), std::move(detail)};
    };
    std::ostringstream d;
    if (profile.deployment_mb_limit && req.deployment_mb > *profile.deployment_mb_limit) {
        d << "deployment " << req.deployment_mb << " MB exceeds " << *profile.deployment_mb_limit << " MB";
        return reject("deployment", d.str());
    }
    if (req.memory_gb > profile.memory_gb_limit) {
        d << "memory " << req.memory_gb << " GB exceeds " << profile.memory_gb_limit << " GB";
        return reject("memory", d.str());
    }
    if (profile.disk_counts_against_memory) {
        // Disk space consumes from the memory limit.
        if (req.memory_gb + req.disk_gb > profile.memory_gb_limit) {
            d << "memory " << req.memory_gb << " GB + disk " << req.disk_gb << " GB exceeds shared "
              << profile.memory_gb_limit << " GB";
            return reject("combined", d.str());
        }
    } else if (auto limit = profile.disk_gb_limit(); limit && req.disk_gb > *limit) {
        d << "disk " << req.disk_gb << " GB exceeds " << *limit << " GB";
        return reject("disk", d.str());
    }
    if (req.max_runtime_s > profile.max_runtime_s) {
        d << "runtime " << req.max_runtime_s << " s exceeds " << profile.max_runtime_s << " s";
        return reject("runtime", d.str());
    }
    return Admission{};
}

const char* job_state_name(JobState s) {
    switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
    case JobState::timed_out: return "timed_out";
    case JobState::cancelled: return "cancelled";
    }
    return "?";
}

JobState parse_job_state(const std::string& name) {
    for (JobState s : {JobState::queued, JobState::running, JobState::done, JobState::failed,
                       JobState::timed_out, JobState::cancelled}) {
        if (name == job_state_name(s)) {
            return s;
        }
    }
    raise(errc::malformed_config, "unknown job state '" + name + "'");
}

bool is_terminal(JobState s) {
    return s != JobState::queued && s != JobState::running;
}

bool legal_transition(JobState from, JobState to) {
    switch (from) {
    case JobState::queued:
        return to == JobState::running || to == JobState::cancelled;
    case JobState::running:
        return to == JobState::done || to == JobState::failed || to == JobState::timed_out ||
               to == JobState::cancelled;
    default:
        return false;
    }
}

} // namespace ems
