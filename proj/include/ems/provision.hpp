#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ems/backends.hpp"
#include "ems/clock.hpp"

namespace ems {

struct ClusterSpec {
    std::string name;
    int n_nodes = 1;
    int gpu_per_node = 0;
    Scheduler scheduler = Scheduler::slurm;
    double batch_setup_minutes = 20.0; // T: setup time for one batch of 10 nodes

    void validate() const;
};

enum class ClusterState { provisioning, running, stopped };

const char* cluster_state_name(ClusterState s);

struct ClusterHandle {
    ClusterSpec spec;
    ClusterState state = ClusterState::provisioning;
    std::string frontend_address; // empty iff stopped
    TimePoint started_at{};
    TimePoint ready_at{};
};

struct NodeRow {
    std::string name;
    std::string role; // frontend | compute
    std::string address;
    std::string state;
};

// Nodes come up in batches of 10, plus a fixed 5 minutes when GPUs need
// their driver stack: (1 + floor((N-1)/10)) * T, +5 if gpu.
double setup_time_minutes(int n_nodes, bool gpu, double t_batch_minutes);

// Deterministic synthetic address derived from the cluster name.
std::string frontend_address_for(const std::string& cluster_name);
std::string compute_address_for(const std::string& cluster_name, int node_index);

// Simulated ephemeral-cluster registry, persisted to state/clusters.json.
// Provisioning clusters become running once the clock passes ready_at.
class ClusterRuntime {
public:
    ClusterRuntime(std::filesystem::path state_dir, const Clock& clock);

    ClusterHandle start(const ClusterSpec& spec);
    ClusterHandle stop(const std::string& name);
    ClusterHandle get(const std::string& name) const;
    bool exists(const std::string& name) const;
    std::vector<ClusterHandle> all() const;
    std::vector<NodeRow> list_nodes(const std::string& name) const;

    // Throws BackendUnavailable unless the cluster is effectively running.
    ClusterHandle require_running(const std::string& name) const;

private:
    ClusterHandle effective(ClusterHandle h) const;
    void save() const;
    void load();

    std::filesystem::path file_;
    const Clock& clock_;
    std::vector<ClusterHandle> clusters_;
};

ClusterSpec cluster_spec_from_ini(const std::string& name, const std::filesystem::path& ini_path);

} // namespace ems
