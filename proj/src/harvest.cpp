#include "ems/harvest.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "ems/backends.hpp"
#include "ems/errors.hpp"
#include "ems/packaging.hpp"

namespace ems {

using nlohmann::json;

void require_package(const fs::path& packages_root, const std::string& pid) {
    if (!fs::is_directory(packages_root / pid)) {
        raise(errc::unknown_package, "no package " + pid);
    }
}

namespace {

std::vector<int> job_indices(const fs::path& package_dir) {
    std::vector<int> out;
    fs::path jobs_dir = package_dir / "jobs";
    if (!fs::is_directory(jobs_dir)) {
        return out;
    }
    for (const auto& entry : fs::directory_iterator(jobs_dir)) {
        if (!entry.is_directory()) {
            continue;
        }
        try {
            out.push_back(std::stoi(entry.path().filename().string()));
        } catch (const std::exception&) {
            // stray directory, not a job
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string first_line(const std::string& text) {
    std::size_t nl = text.find('\n');
    return nl == std::string::npos ? text : text.substr(0, nl + 1);
}

} // namespace

ReduceReport reduce(const fs::path& packages_root, const std::string& pid,
                    const std::string& filename, const std::set<int>* terminal_jobs) {
    require_package(packages_root, pid);
    std::string rel = normalize_dep_path(filename);
    fs::path package_dir = packages_root / pid;

    ReduceReport report;
    report.pid = pid;
    report.filename = rel;

    std::vector<std::pair<int, std::string>> present; // job index -> file bytes
    for (int k : job_indices(package_dir)) {
        if (terminal_jobs != nullptr && terminal_jobs->count(k) == 0) {
            report.jobs_missing.push_back(k);
            continue;
        }
        fs::path file = package_dir / "jobs" / std::to_string(k) / rel;
        if (!fs::is_regular_file(file)) {
            report.jobs_missing.push_back(k);
            continue;
        }
        std::string bytes = read_file(file);
        if (bytes.find('\0') != std::string::npos) {
            raise(errc::not_textual, "job " + std::to_string(k) + "/" + rel +
                                         " contains NUL bytes; reduce handles line-oriented text only");
        }
        present.emplace_back(k, std::move(bytes));
    }
    if (present.empty()) {
        raise(errc::no_such_result_file, "no job of " + pid + " produced " + rel);
    }

    // Header deduplication requires every present file to open with the
    // byte-identical line; anything else falls back to plain concatenation.
    std::string header = first_line(present.front().second);
    bool dedup = !header.empty();
    for (const auto& [k, bytes] : present) {
        if (first_line(bytes) != header) {
            dedup = false;
            break;
        }
    }

    std::string out;
    if (dedup) {
        out = header;
        for (const auto& [k, bytes] : present) {
            out.append(bytes, header.size(), std::string::npos);
        }
    } else {
        for (const auto& [k, bytes] : present) {
            out += bytes;
        }
    }
    for (const auto& [k, bytes] : present) {
        report.jobs_included.push_back(k);
    }
    report.header_deduplicated = dedup;

    fs::path out_path = package_dir / "reduce" / rel;
    write_file(out_path, out);
    report.output_path = out_path.string();

    json j;
    j["pid"] = report.pid;
    j["filename"] = report.filename;
    j["jobs_included"] = report.jobs_included;
    j["jobs_missing"] = report.jobs_missing;
    j["header_deduplicated"] = report.header_deduplicated;
    j["output_path"] = report.output_path;
    atomic_write_file(package_dir / "reduce" / (rel + ".report.json"), j.dump(2) + "\n");
    return report;
}

void get_package(const fs::path& packages_root, const std::string& pid, const fs::path& dest) {
    require_package(packages_root, pid);
    fs::path package_dir = packages_root / pid;
    fs::path target = dest / pid;
    fs::create_directories(target);
    if (fs::exists(package_dir / "manifest.json")) {
        write_file(target / "manifest.json", read_file(package_dir / "manifest.json"));
    }
    for (const char* sub : {"reduce", "jobs"}) {
        if (fs::is_directory(package_dir / sub)) {
            copy_tree_over(package_dir / sub, target / sub);
        }
    }
}

namespace {

struct LatestRecord {
    std::uint64_t numeric_id = 0;
    std::string state;
};

std::map<int, LatestRecord> latest_records(const fs::path& state_dir, const std::string& pid) {
    std::map<int, LatestRecord> latest;
    fs::path file = state_dir / "jobs.json";
    if (!fs::exists(file)) {
        return latest;
    }
    json j = json::parse(read_file(file));
    for (const auto& item : j.at("jobs")) {
        if (item.at("pid").get<std::string>() != pid) {
            continue;
        }
        int index = item.at("job_index").get<int>();
        std::uint64_t numeric_id = std::stoull(item.at("job_id").get<std::string>());
        auto it = latest.find(index);
        if (it == latest.end() || numeric_id > it->second.numeric_id) {
            latest[index] = {numeric_id, item.at("state").get<std::string>()};
        }
    }
    return latest;
}

} // namespace

ProgressSummary progress(const fs::path& state_dir, const fs::path& packages_root,
                         const std::string& pid) {
    require_package(packages_root, pid);
    ProgressSummary summary;
    for (const auto& [index, rec] : latest_records(state_dir, pid)) {
        summary.counts[rec.state] += 1;
        summary.total += 1;
    }
    return summary;
}

std::set<int> terminal_job_indices(const fs::path& state_dir, const std::string& pid) {
    std::set<int> out;
    for (const auto& [index, rec] : latest_records(state_dir, pid)) {
        if (is_terminal(parse_job_state(rec.state))) {
            out.insert(index);
        }
    }
    return out;
}

} // namespace ems
