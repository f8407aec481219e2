#include "ems/engine.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ems/errors.hpp"
#include "ems/fs_util.hpp"
#include "ems/proc.hpp"

namespace ems {

using nlohmann::json;

namespace {

json record_to_json(const JobRecord& r) {
    json j;
    j["job_id"] = r.job_id;
    j["pid"] = r.pid;
    j["job_index"] = r.job_index;
    j["state"] = job_state_name(r.state);
    j["backend"] = r.backend;
    j["submit_time"] = to_iso8601(r.submit_time);
    if (r.start_time) {
        j["start_time"] = to_iso8601(*r.start_time);
    }
    if (r.end_time) {
        j["end_time"] = to_iso8601(*r.end_time);
    }
    if (r.exit_code) {
        j["exit_code"] = *r.exit_code;
    }
    return j;
}

JobRecord record_from_json(const json& j) {
    JobRecord r;
    r.job_id = j.at("job_id").get<std::string>();
    r.pid = j.at("pid").get<std::string>();
    r.job_index = j.at("job_index").get<int>();
    r.state = parse_job_state(j.at("state").get<std::string>());
    r.backend = j.at("backend").get<std::string>();
    r.submit_time = parse_iso8601(j.at("submit_time").get<std::string>());
    if (j.contains("start_time")) {
        r.start_time = parse_iso8601(j.at("start_time").get<std::string>());
    }
    if (j.contains("end_time")) {
        r.end_time = parse_iso8601(j.at("end_time").get<std::string>());
    }
    if (j.contains("exit_code")) {
        r.exit_code = j.at("exit_code").get<int>();
    }
    return r;
}

} // namespace

Engine::Engine(std::filesystem::path state_dir, const Clock& clock, const ClusterRuntime* clusters)
    : state_dir_(std::move(state_dir)), clock_(clock), clusters_(clusters) {
    fs::create_directories(state_dir_);
    load();
}

void Engine::load() {
    fs::path file = state_dir_ / "jobs.json";
    if (!fs::exists(file)) {
        return;
    }
    json j = json::parse(read_file(file));
    next_job_id_ = j.at("next_job_id").get<std::uint64_t>();
    for (const auto& item : j.at("jobs")) {
        JobRecord r = record_from_json(item);
        jobs_[r.job_id] = r;
    }
}

void Engine::materialize_locked() const {
    json arr = json::array();
    for (const auto& [id, rec] : jobs_) {
        arr.push_back(record_to_json(rec));
    }
    json j;
    j["next_job_id"] = next_job_id_;
    j["jobs"] = arr;
    atomic_write_file(state_dir_ / "jobs.json", j.dump(2) + "\n");
}

void Engine::append_event_locked(const JobRecord& rec, JobState from) {
    json j;
    j["ts"] = to_iso8601(clock_.now());
    j["job_id"] = rec.job_id;
    j["from"] = job_state_name(from);
    j["to"] = job_state_name(rec.state);
    j["pid"] = rec.pid;
    j["job_index"] = rec.job_index;
    if (rec.exit_code) {
        j["exit_code"] = *rec.exit_code;
    }
    std::ofstream out(state_dir_ / "events.jsonl", std::ios::app | std::ios::binary);
    out << j.dump() << "\n";
}

std::string Engine::next_job_id_locked() {
    return std::to_string(next_job_id_++);
}

void Engine::transition_locked(JobRecord& rec, JobState to) {
    if (!legal_transition(rec.state, to)) {
        raise(errc::invalid_transition, "job " + rec.job_id + " cannot move " +
                                            job_state_name(rec.state) + " -> " + job_state_name(to));
    }
    JobState from = rec.state;
    rec.state = to;
    if (to == JobState::running) {
        rec.start_time = clock_.now();
    } else {
        rec.end_time = clock_.now();
    }
    append_event_locked(rec, from);
}

JobRecord Engine::submit(const TaskSpec& task, const BackendRef& backend) {
    task.resources.validate();
    if (backend.kind == BackendRef::Kind::cluster) {
        if (clusters_ == nullptr) {
            raise(errc::backend_unavailable, "no cluster runtime attached");
        }
        clusters_->require_running(backend.name);
    } else {
        const ServerlessProfile& profile = ServerlessProfile::builtin(backend.name);
        Admission a = admit(task.resources, profile);
        if (!a.accepted) {
            raise(errc::admission_refused, a.reason + ": " + a.detail);
        }
    }

    std::lock_guard lock(mu_);
    JobRecord rec;
    rec.job_id = next_job_id_locked();
    rec.pid = task.pid;
    rec.job_index = task.job_index;
    rec.state = JobState::queued;
    rec.backend = backend.name;
    rec.submit_time = clock_.now();
    jobs_[rec.job_id] = rec;
    pending_tasks_[rec.job_id] = task;
    append_event_locked(rec, JobState::queued);
    materialize_locked();
    return rec;
}

void Engine::run(int slots) {
    if (slots < 1) {
        raise(errc::invalid_resource, "slots must be >= 1");
    }
    while (true) {
        bool idle;
        {
            std::lock_guard lock(mu_);
            bool dirty = false;

            // Reap finished processes.
            for (auto it = running_.begin(); it != running_.end();) {
                auto exit_code = try_reap(it->second.pid);
                if (!exit_code) {
                    ++it;
                    continue;
                }
                auto& rec = jobs_.at(it->first);
                if (rec.state == JobState::running) {
                    rec.exit_code = *exit_code;
                    transition_locked(rec, *exit_code == 0 ? JobState::done : JobState::failed);
                    dirty = true;
                }
                it = running_.erase(it);
            }

            // Enforce wall-clock timeouts.
            auto now = std::chrono::steady_clock::now();
            for (auto& [id, proc] : running_) {
                auto& rec = jobs_.at(id);
                if (rec.state != JobState::running) {
                    continue;
                }
                auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(now - proc.started);
                if (elapsed.count() > std::int64_t(proc.max_runtime_s) * 1000) {
                    kill_process_group(proc.pid);
                    wait_process(proc.pid);
                    rec.exit_code = std::nullopt;
                    transition_locked(rec, JobState::timed_out);
                    dirty = true;
                }
            }
            for (auto it = running_.begin(); it != running_.end();) {
                it = jobs_.at(it->first).state == JobState::running ? std::next(it) : running_.erase(it);
            }

            // Start queued tasks FIFO while slots remain.
            if (int(running_.size()) < slots && !pending_tasks_.empty()) {
                std::vector<const JobRecord*> queued;
                for (const auto& [id, task] : pending_tasks_) {
                    const auto& rec = jobs_.at(id);
                    if (rec.state == JobState::queued) {
                        queued.push_back(&rec);
                    }
                }
                std::sort(queued.begin(), queued.end(), [](const JobRecord* a, const JobRecord* b) {
                    if (a->submit_time != b->submit_time) {
                        return a->submit_time < b->submit_time;
                    }
                    if (a->job_index != b->job_index) {
                        return a->job_index < b->job_index;
                    }
                    return std::stoull(a->job_id) < std::stoull(b->job_id);
                });
                for (const JobRecord* r : queued) {
                    if (int(running_.size()) >= slots) {
                        break;
                    }
                    const TaskSpec& task = pending_tasks_.at(r->job_id);
                    SpawnOptions opts;
                    opts.cwd = task.workdir;
                    opts.stdout_path = task.workdir / "stdout.log";
                    opts.stderr_path = task.workdir / "stderr.log";
                    opts.env = {{"EMS_SEED", std::to_string(task.seed)},
                                {"EMS_JOB_INDEX", std::to_string(task.job_index)},
                                {"EMS_JOB_ID", r->job_id}};
                    opts.env.insert(opts.env.end(), task.extra_env.begin(), task.extra_env.end());
                    auto& rec = jobs_.at(r->job_id);
                    try {
                        pid_t pid = spawn_process(task.command, opts);
                        running_[r->job_id] = {pid, std::chrono::steady_clock::now(),
                                               task.resources.max_runtime_s};
                        transition_locked(rec, JobState::running);
                    } catch (const error&) {
                        transition_locked(rec, JobState::running);
                        rec.exit_code = 127;
                        transition_locked(rec, JobState::failed);
                    }
                    dirty = true;
                }
            }

            // Drop tasks that reached a terminal state (cancelled included).
            for (auto it = pending_tasks_.begin(); it != pending_tasks_.end();) {
                it = is_terminal(jobs_.at(it->first).state) ? pending_tasks_.erase(it) : std::next(it);
            }

            if (dirty) {
                materialize_locked();
            }
            idle = running_.empty() &&
                   std::none_of(pending_tasks_.begin(), pending_tasks_.end(), [&](const auto& kv) {
                       return jobs_.at(kv.first).state == JobState::queued;
                   });
        }
        if (idle) {
            std::lock_guard lock(mu_);
            materialize_locked();
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
}

JobRecord Engine::status(const std::string& job_id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) {
        raise(errc::unknown_job, "no job with id " + job_id);
    }
    return it->second;
}

JobRecord Engine::cancel(const std::string& job_id) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) {
        raise(errc::unknown_job, "no job with id " + job_id);
    }
    JobRecord& rec = it->second;
    if (auto run_it = running_.find(job_id); run_it != running_.end()) {
        kill_process_group(run_it->second.pid);
        wait_process(run_it->second.pid);
        running_.erase(run_it);
    }
    transition_locked(rec, JobState::cancelled); // raises InvalidTransition when terminal
    materialize_locked();
    return rec;
}

std::vector<JobRecord> Engine::all_jobs() const {
    std::lock_guard lock(mu_);
    std::vector<JobRecord> out;
    out.reserve(jobs_.size());
    for (const auto& [id, rec] : jobs_) {
        out.push_back(rec);
    }
    return out;
}

std::map<std::string, int> Engine::state_counts(const std::string& pid) const {
    std::lock_guard lock(mu_);
    // Latest record per job_index wins; earlier submissions of the same
    // package remain in the log but no longer count.
    std::map<int, const JobRecord*> latest;
    for (const auto& [id, rec] : jobs_) {
        if (rec.pid != pid) {
            continue;
        }
        auto [it, inserted] = latest.try_emplace(rec.job_index, &rec);
        if (!inserted && std::stoull(rec.job_id) > std::stoull(it->second->job_id)) {
            it->second = &rec;
        }
    }
    std::map<std::string, int> counts;
    for (const auto& [idx, rec] : latest) {
        counts[job_state_name(rec->state)] += 1;
    }
    return counts;
}

std::vector<MapResult> Engine::map(const ServerlessProfile* profile, const std::string& command_template,
                                   const std::vector<std::string>& values, int slots,
                                   const ResourceRequest& request) {
    request.validate();
    if (profile != nullptr) {
        Admission a = admit(request, *profile);
        if (!a.accepted) {
            // All-or-nothing: nothing was submitted yet.
            raise(errc::admission_refused, a.reason + ": " + a.detail);
        }
    }
    if (values.empty()) {
        return {};
    }

    std::string backend_name = profile ? profile->name : "local";
    fs::path map_root = state_dir_ / "map" / std::to_string(next_job_id_);
    std::vector<std::string> ids(values.size());
    {
        std::lock_guard lock(mu_);
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::string cmd = command_template;
            const std::string placeholder = "{}";
            for (std::size_t pos = 0; (pos = cmd.find(placeholder, pos)) != std::string::npos;) {
                cmd.replace(pos, placeholder.size(), values[i]);
                pos += values[i].size();
            }
            TaskSpec task;
            task.job_index = int(i);
            task.resources = request;
            task.command = {"/bin/sh", "-c", cmd};
            task.workdir = map_root / std::to_string(i);
            task.pid = "map:" + backend_name;
            task.extra_env = {{"EMS_MAP_INDEX", std::to_string(i)}, {"EMS_MAP_VALUE", values[i]}};
            fs::create_directories(task.workdir);

            JobRecord rec;
            rec.job_id = next_job_id_locked();
            rec.pid = task.pid;
            rec.job_index = task.job_index;
            rec.backend = backend_name;
            rec.submit_time = clock_.now();
            jobs_[rec.job_id] = rec;
            pending_tasks_[rec.job_id] = std::move(task);
            append_event_locked(rec, JobState::queued);
            ids[i] = rec.job_id;
        }
        materialize_locked();
    }
    run(slots);

    std::vector<MapResult> results(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        JobRecord rec = status(ids[i]);
        MapResult& res = results[i];
        res.index = i;
        res.value = values[i];
        res.job_id = ids[i];
        res.exit_code = rec.exit_code;
        res.ok = rec.state == JobState::done;
        fs::path out_file = map_root / std::to_string(i) / "stdout.log";
        if (fs::exists(out_file)) {
            res.output = read_file(out_file);
        }
    }
    return results;
}

} // namespace ems
