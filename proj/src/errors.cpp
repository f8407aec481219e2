#include "ems/errors.hpp"

namespace ems {

const char* errc_name(errc code) {
    switch (code) {
    case errc::invalid_path: return "InvalidPath";
    case errc::invalid_job_count: return "InvalidJobCount";
    case errc::invalid_resource: return "InvalidResource";
    case errc::io_failure: return "IoFailure";
    case errc::no_parallel_loop: return "NoParallelLoop";
    case errc::malformed_loop: return "MalformedLoop";
    case errc::unsupported_range: return "UnsupportedRange";
    case errc::empty_grid: return "EmptyGrid";
    case errc::admission_refused: return "AdmissionRefused";
    case errc::backend_unavailable: return "BackendUnavailable";
    case errc::unknown_job: return "UnknownJob";
    case errc::invalid_transition: return "InvalidTransition";
    case errc::duplicate_cluster: return "DuplicateCluster";
    case errc::unknown_cluster: return "UnknownCluster";
    case errc::unknown_package: return "UnknownPackage";
    case errc::no_such_result_file: return "NoSuchResultFile";
    case errc::not_textual: return "NotTextual";
    case errc::unknown_bundle: return "UnknownBundle";
    case errc::unknown_dependency: return "UnknownDependency";
    case errc::dependency_not_ready: return "DependencyNotReady";
    case errc::duplicate_alias: return "DuplicateAlias";
    case errc::dangling_reference: return "DanglingReference";
    case errc::unknown_worksheet: return "UnknownWorksheet";
    case errc::malformed_assignment: return "MalformedAssignment";
    case errc::malformed_config: return "MalformedConfig";
    }
    return "Error";
}

} // namespace ems
