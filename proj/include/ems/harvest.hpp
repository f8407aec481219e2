#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ems/fs_util.hpp"

namespace ems {

struct ReduceReport {
    std::string pid;
    std::string filename;
    std::vector<int> jobs_included; // ascending
    std::vector<int> jobs_missing;  // no file, or excluded as non-terminal
    bool header_deduplicated = false;
    std::string output_path;
};

// Concatenates jobs/<k>/<filename> in ascending job order into
// <pid>/reduce/<filename>. When every per-job file opens with the same
// line, that line is treated as a header and emitted once. Jobs without
// the file are reported, never silently skipped.
//
// `terminal_jobs`, when given, restricts the sweep to jobs already in a
// terminal state (a live engine may still be writing the rest).
ReduceReport reduce(const fs::path& packages_root, const std::string& pid,
                    const std::string& filename,
                    const std::set<int>* terminal_jobs = nullptr);

// Copies manifest, reduce outputs and per-job outputs to <dest>/<pid>/.
// Idempotent: re-running overwrites with identical bytes.
void get_package(const fs::path& packages_root, const std::string& pid, const fs::path& dest);

struct ProgressSummary {
    std::map<std::string, int> counts; // job state name -> count
    int total = 0;
};

// Snapshot of the latest JobRecord per job_index for a package, read from
// the committed registry file.
ProgressSummary progress(const fs::path& state_dir, const fs::path& packages_root,
                         const std::string& pid);

// Terminal job indices for a package, from the committed registry.
std::set<int> terminal_job_indices(const fs::path& state_dir, const std::string& pid);

void require_package(const fs::path& packages_root, const std::string& pid);

} // namespace ems
