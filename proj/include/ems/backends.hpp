#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ems/clock.hpp"

namespace ems {

enum class Scheduler { slurm, sge };

const char* scheduler_name(Scheduler s);
Scheduler parse_scheduler(const std::string& name);

struct ResourceRequest {
    int cpus = 1;
    int gpus = 0;
    double memory_gb = 1.0;
    double deployment_mb = 1.0;
    double disk_gb = 0.0;
    int max_runtime_s = 3600;
    // Scheduler directives we do not interpret; emitted verbatim into
    // batch scripts.
    std::vector<std::string> passthrough;

    // Positive fields in (0, 1e6], non-negative fields in [0, 1e6], all finite.
    void validate() const;
    bool operator==(const ResourceRequest&) const = default;
};

// Per-invocation limits of one serverless offering. Built-ins for lambda,
// gcf and azure; any field can be overridden from profiles.ini.
struct ServerlessProfile {
    enum class DiskUnit { gb, mb };

    std::string name;
    std::optional<double> deployment_mb_limit; // nullopt = unlimited
    double memory_gb_limit = 0.0;
    std::optional<double> disk_limit_value;    // nullopt = shared with memory
    DiskUnit disk_limit_unit = DiskUnit::gb;
    bool disk_counts_against_memory = false;
    int max_runtime_s = 0;

    std::optional<double> disk_gb_limit() const;

    static const ServerlessProfile& builtin(const std::string& name);
    static std::vector<std::string> builtin_names();
};

// Built-in profile, with overrides applied from <ems_home>/profiles.ini
// when that file has a [name] section.
ServerlessProfile load_profile(const std::string& name, const std::filesystem::path& ems_home);

struct Admission {
    bool accepted = true;
    std::string reason;  // deployment | memory | disk | combined | runtime
    std::string detail;
};

// Rejection is a value, not an error. Boundary values are accepted.
Admission admit(const ResourceRequest& req, const ServerlessProfile& profile);

enum class JobState { queued, running, done, failed, timed_out, cancelled };

const char* job_state_name(JobState s);
JobState parse_job_state(const std::string& name);
bool is_terminal(JobState s);
bool legal_transition(JobState from, JobState to);

struct JobRecord {
    std::string job_id;     // backend-scoped, dense integers on the local backend
    std::string pid;        // owning package, or profile name for map tasks
    int job_index = 0;
    JobState state = JobState::queued;
    std::string backend;    // cluster name or serverless profile
    TimePoint submit_time{};
    std::optional<TimePoint> start_time;
    std::optional<TimePoint> end_time;
    std::optional<int> exit_code;
};

} // namespace ems
