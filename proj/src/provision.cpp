#include "ems/provision.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "ems/errors.hpp"
#include "ems/fs_util.hpp"
#include "ems/ini.hpp"
#include "ems/sha1.hpp"

namespace ems {

using nlohmann::json;

void ClusterSpec::validate() const {
    if (name.empty()) {
        raise(errc::malformed_config, "cluster name must be non-empty");
    }
    if (n_nodes < 1) {
        raise(errc::malformed_config, "n_nodes must be >= 1");
    }
    if (gpu_per_node < 0) {
        raise(errc::malformed_config, "gpu_per_node must be >= 0");
    }
    if (!(batch_setup_minutes > 0)) {
        raise(errc::malformed_config, "batch_setup_minutes must be > 0");
    }
}

const char* cluster_state_name(ClusterState s) {
    switch (s) {
    case ClusterState::provisioning: return "provisioning";
    case ClusterState::running: return "running";
    case ClusterState::stopped: return "stopped";
    }
    return "?";
}

double setup_time_minutes(int n_nodes, bool gpu, double t_batch_minutes) {
    int batches = 1 + (n_nodes - 1) / 10;
    return batches * t_batch_minutes + (gpu ? 5.0 : 0.0);
}

namespace {

std::array<std::uint8_t, 20> name_digest(const std::string& name) {
    Sha1 h;
    h.update(name);
    return h.digest();
}

} // namespace

std::string frontend_address_for(const std::string& cluster_name) {
    auto d = name_digest(cluster_name);
    return "10." + std::to_string(d[0]) + "." + std::to_string(d[1]) + ".10";
}

std::string compute_address_for(const std::string& cluster_name, int node_index) {
    auto d = name_digest(cluster_name);
    return "10." + std::to_string(d[0]) + "." + std::to_string(d[1]) + "." +
           std::to_string(11 + node_index % 244);
}

namespace {

json handle_to_json(const ClusterHandle& h) {
    json j;
    j["name"] = h.spec.name;
    j["n_nodes"] = h.spec.n_nodes;
    j["gpu_per_node"] = h.spec.gpu_per_node;
    j["scheduler"] = scheduler_name(h.spec.scheduler);
    j["batch_setup_minutes"] = h.spec.batch_setup_minutes;
    j["state"] = cluster_state_name(h.state);
    j["frontend_address"] = h.frontend_address;
    j["started_at"] = to_iso8601(h.started_at);
    j["ready_at"] = to_iso8601(h.ready_at);
    return j;
}

ClusterHandle handle_from_json(const json& j) {
    ClusterHandle h;
    h.spec.name = j.at("name").get<std::string>();
    h.spec.n_nodes = j.at("n_nodes").get<int>();
    h.spec.gpu_per_node = j.at("gpu_per_node").get<int>();
    h.spec.scheduler = parse_scheduler(j.at("scheduler").get<std::string>());
    h.spec.batch_setup_minutes = j.at("batch_setup_minutes").get<double>();
    std::string state = j.at("state").get<std::string>();
    h.state = state == "stopped" ? ClusterState::stopped : ClusterState::provisioning;
    h.frontend_address = j.at("frontend_address").get<std::string>();
    h.started_at = parse_iso8601(j.at("started_at").get<std::string>());
    h.ready_at = parse_iso8601(j.at("ready_at").get<std::string>());
    return h;
}

} // namespace

ClusterRuntime::ClusterRuntime(std::filesystem::path state_dir, const Clock& clock)
    : file_(state_dir / "clusters.json"), clock_(clock) {
    load();
}

void ClusterRuntime::load() {
    clusters_.clear();
    if (!fs::exists(file_)) {
        return;
    }
    json j = json::parse(read_file(file_));
    for (const auto& item : j.at("clusters")) {
        clusters_.push_back(handle_from_json(item));
    }
}

void ClusterRuntime::save() const {
    json arr = json::array();
    for (const auto& h : clusters_) {
        arr.push_back(handle_to_json(h));
    }
    json j;
    j["clusters"] = arr;
    atomic_write_file(file_, j.dump(2) + "\n");
}

ClusterHandle ClusterRuntime::effective(ClusterHandle h) const {
    if (h.state == ClusterState::provisioning && clock_.now() >= h.ready_at) {
        h.state = ClusterState::running;
    }
    return h;
}

ClusterHandle ClusterRuntime::start(const ClusterSpec& spec) {
    spec.validate();
    for (auto& h : clusters_) {
        if (h.spec.name == spec.name) {
            if (h.state != ClusterState::stopped) {
                raise(errc::duplicate_cluster, "cluster '" + spec.name + "' is already live");
            }
            // A stopped name can be reused; replace the handle.
            clusters_.erase(clusters_.begin() + (&h - clusters_.data()));
            break;
        }
    }
    ClusterHandle h;
    h.spec = spec;
    h.state = ClusterState::provisioning;
    h.frontend_address = frontend_address_for(spec.name);
    h.started_at = clock_.now();
    double minutes = setup_time_minutes(spec.n_nodes, spec.gpu_per_node > 0, spec.batch_setup_minutes);
    h.ready_at = h.started_at + Millis(std::llround(minutes * 60.0 * 1000.0));
    clusters_.push_back(h);
    save();
    return effective(h);
}

ClusterHandle ClusterRuntime::stop(const std::string& name) {
    for (auto& h : clusters_) {
        if (h.spec.name == name) {
            h.state = ClusterState::stopped;
            h.frontend_address.clear();
            save();
            return h;
        }
    }
    raise(errc::unknown_cluster, "no cluster named '" + name + "'");
}

bool ClusterRuntime::exists(const std::string& name) const {
    for (const auto& h : clusters_) {
        if (h.spec.name == name) {
            return true;
        }
    }
    return false;
}

ClusterHandle ClusterRuntime::get(const std::string& name) const {
    for (const auto& h : clusters_) {
        if (h.spec.name == name) {
            return effective(h);
        }
    }
    raise(errc::unknown_cluster, "no cluster named '" + name + "'");
}

std::vector<ClusterHandle> ClusterRuntime::all() const {
    std::vector<ClusterHandle> out;
    out.reserve(clusters_.size());
    for (const auto& h : clusters_) {
        out.push_back(effective(h));
    }
    return out;
}

std::vector<NodeRow> ClusterRuntime::list_nodes(const std::string& name) const {
    ClusterHandle h = get(name);
    std::string state = cluster_state_name(h.state);
    std::vector<NodeRow> rows;
    rows.push_back({name + "-frontend", "frontend", h.state == ClusterState::stopped ? "" : h.frontend_address,
                    state});
    for (int i = 0; i < h.spec.n_nodes; ++i) {
        rows.push_back({name + "-compute-" + std::to_string(i + 1), "compute",
                        h.state == ClusterState::stopped ? "" : compute_address_for(name, i), state});
    }
    return rows;
}

ClusterHandle ClusterRuntime::require_running(const std::string& name) const {
    ClusterHandle h = get(name);
    if (h.state == ClusterState::provisioning) {
        raise(errc::backend_unavailable,
              "cluster '" + name + "' is still provisioning; ready at " + to_iso8601(h.ready_at));
    }
    if (h.state == ClusterState::stopped) {
        raise(errc::backend_unavailable, "cluster '" + name + "' is stopped");
    }
    return h;
}

ClusterSpec cluster_spec_from_ini(const std::string& name, const std::filesystem::path& ini_path) {
    ClusterSpec spec;
    spec.name = name;
    if (!fs::exists(ini_path)) {
        return spec;
    }
    IniFile ini = IniFile::parse_file(ini_path);
    const IniSection* s = ini.find("cluster");
    if (s == nullptr) {
        s = ini.find("");
    }
    if (s == nullptr) {
        return spec;
    }
    for (const auto& [key, value] : s->entries) {
        if (key == "n_nodes") {
            spec.n_nodes = std::stoi(value);
        } else if (key == "gpu_per_node") {
            spec.gpu_per_node = std::stoi(value);
        } else if (key == "scheduler") {
            spec.scheduler = parse_scheduler(value);
        } else if (key == "batch_setup_minutes") {
            spec.batch_setup_minutes = std::stod(value);
        } else {
            raise(errc::malformed_config, "unknown cluster key '" + key + "' in " + ini_path.string());
        }
    }
    return spec;
}

} // namespace ems
