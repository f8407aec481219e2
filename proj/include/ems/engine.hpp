#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ems/backends.hpp"
#include "ems/clock.hpp"
#include "ems/provision.hpp"
#include "ems/scriptgrid.hpp"

namespace ems {

struct BackendRef {
    enum class Kind { cluster, serverless };

    Kind kind = Kind::cluster;
    std::string name; // cluster name or profile name

    static BackendRef cluster(std::string name) { return {Kind::cluster, std::move(name)}; }
    static BackendRef serverless(std::string profile) { return {Kind::serverless, std::move(profile)}; }
};

struct MapResult {
    std::size_t index = 0;
    std::string value;
    bool ok = false;
    std::string output; // captured stdout
    std::optional<int> exit_code;
    std::string job_id;
};

// Local simulated batch queue. Submissions append to an event log
// (state/events.jsonl) and a materialized registry (state/jobs.json);
// run() drives every queued job to a terminal state with at most `slots`
// processes running at any instant, FIFO by (submit_time, job_index).
//
// All state mutations are serialized under one mutex; status() returns
// committed records only.
class Engine {
public:
    Engine(std::filesystem::path state_dir, const Clock& clock,
           const ClusterRuntime* clusters = nullptr);

    JobRecord submit(const TaskSpec& task, const BackendRef& backend);

    // Runs until no job is queued or running. Safe to call from a worker
    // thread while status/cancel are called from others.
    void run(int slots);

    JobRecord status(const std::string& job_id) const;

    // queued -> cancelled directly; running jobs get their process group
    // killed. Terminal jobs raise InvalidTransition.
    JobRecord cancel(const std::string& job_id);

    std::vector<JobRecord> all_jobs() const;

    // Per-state counts for a package, over the latest record per job_index.
    std::map<std::string, int> state_counts(const std::string& pid) const;

    // Serverless/local fan-out: one task per value, `{}` in the template
    // replaced by the value, EMS_MAP_INDEX in the environment. Results come
    // back in input order; a failed task yields a marker, not an abort.
    // Admission (when a profile is given) is all-or-nothing up front.
    std::vector<MapResult> map(const ServerlessProfile* profile, const std::string& command_template,
                               const std::vector<std::string>& values, int slots,
                               const ResourceRequest& request);

private:
    struct Running {
        pid_t pid;
        std::chrono::steady_clock::time_point started;
        int max_runtime_s;
    };

    std::string next_job_id_locked();
    void transition_locked(JobRecord& rec, JobState to);
    void append_event_locked(const JobRecord& rec, JobState from);
    void materialize_locked() const;
    void load();

    std::filesystem::path state_dir_;
    const Clock& clock_;
    const ClusterRuntime* clusters_;

    mutable std::mutex mu_;
    std::uint64_t next_job_id_ = 1;
    std::map<std::string, JobRecord> jobs_;
    std::map<std::string, TaskSpec> pending_tasks_; // queued in this process
    std::map<std::string, Running> running_;
};

} // namespace ems
