#pragma once

#include <sys/types.h>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ems {

struct SpawnOptions {
    std::filesystem::path cwd;
    std::filesystem::path stdout_path; // empty -> inherit
    std::filesystem::path stderr_path;
    std::vector<std::pair<std::string, std::string>> env;
};

// fork/exec; the child becomes its own process group leader so the whole
// tree can be killed on timeout or cancel.
pid_t spawn_process(const std::vector<std::string>& argv, const SpawnOptions& opts);

// Non-blocking reap. Returns the exit code once the child is gone
// (128+signal for signal deaths), nullopt while still running.
std::optional<int> try_reap(pid_t pid);

// Blocking reap.
int wait_process(pid_t pid);

void kill_process_group(pid_t pid);

bool process_alive(pid_t pid);

} // namespace ems
