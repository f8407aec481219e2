#include "ems/proc.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "ems/errors.hpp"

namespace ems {

namespace {

int exit_code_from_status(int status) {
    if (WIFEXITED(status)) {
        return WEXITSTATUS(status);
    }
    if (WIFSIGNALED(status)) {
        return 128 + WTERMSIG(status);
    }
    return -1;
}

} // namespace

pid_t spawn_process(const std::vector<std::string>& argv, const SpawnOptions& opts) {
    if (argv.empty()) {
        raise(errc::io_failure, "empty command");
    }
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) {
        cargv.push_back(const_cast<char*>(a.c_str()));
    }
    cargv.push_back(nullptr);

    pid_t pid = ::fork();
    if (pid < 0) {
        raise(errc::io_failure, std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        if (!opts.cwd.empty() && ::chdir(opts.cwd.c_str()) != 0) {
            ::_exit(127);
        }
        auto redirect = [](const std::filesystem::path& p, int target_fd) {
            if (p.empty()) {
                return true;
            }
            int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
            if (fd < 0 || ::dup2(fd, target_fd) < 0) {
                return false;
            }
            ::close(fd);
            return true;
        };
        if (!redirect(opts.stdout_path, STDOUT_FILENO) || !redirect(opts.stderr_path, STDERR_FILENO)) {
            ::_exit(127);
        }
        for (const auto& [k, v] : opts.env) {
            ::setenv(k.c_str(), v.c_str(), 1);
        }
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }
    // Parent side as well, to close the race with an immediate kill.
    ::setpgid(pid, pid);
    return pid;
}

std::optional<int> try_reap(pid_t pid) {
    int status = 0;
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == 0) {
        return std::nullopt;
    }
    if (r < 0) {
        return -1; // already reaped or never existed
    }
    return exit_code_from_status(status);
}

int wait_process(pid_t pid) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) {
            return -1;
        }
    }
    return exit_code_from_status(status);
}

void kill_process_group(pid_t pid) {
    ::kill(-pid, SIGKILL);
}

bool process_alive(pid_t pid) {
    return ::kill(pid, 0) == 0;
}

} // namespace ems
