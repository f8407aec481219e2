#pragma once

#include <stdexcept>
#include <string>

namespace ems {

// Domain error codes. Every CLI verb maps these 1:1 to exit code 1 with the
// code name in the message; usage errors are handled separately (exit 2).
enum class errc {
    invalid_path,
    invalid_job_count,
    invalid_resource,
    io_failure,
    no_parallel_loop,
    malformed_loop,
    unsupported_range,
    empty_grid,
    admission_refused,
    backend_unavailable,
    unknown_job,
    invalid_transition,
    duplicate_cluster,
    unknown_cluster,
    unknown_package,
    no_such_result_file,
    not_textual,
    unknown_bundle,
    unknown_dependency,
    dependency_not_ready,
    duplicate_alias,
    dangling_reference,
    unknown_worksheet,
    malformed_assignment,
    malformed_config,
};

const char* errc_name(errc code);

class error : public std::runtime_error {
public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
    throw error(code, message);
}

} // namespace ems
