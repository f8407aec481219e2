#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ems/clock.hpp"
#include "ems/fs_util.hpp"

namespace ems {

enum class BundleKind { upload, run };
enum class BundleState { created, staged, running, ready, failed };

const char* bundle_kind_name(BundleKind k);
const char* bundle_state_name(BundleState s);

struct BundleDep {
    std::string alias;
    std::string bundle_id;
};

// Immutable node of the provenance DAG. Upload bundles are addressed by
// their content; run bundles by their derivation (command, deps, creation
// sequence number — so repeated runs of the same command stay distinct).
struct Bundle {
    std::string bundle_id;
    BundleKind kind = BundleKind::upload;
    std::vector<BundleDep> deps;
    std::string command;
    BundleState state = BundleState::created;
    std::string contents_hash; // SHA-1 of the canonical file tree once ready/failed
    bool root_is_file = false; // single-file bundles stage as a file, not a directory
    std::uint64_t seq = 0;
    std::string created_at;
    std::optional<int> exit_code;
};

struct MimicEntry {
    std::string old_id;
    std::string new_id; // empty when skipped
    std::string status; // input | replaced | failed | skipped
};

struct MimicReport {
    std::vector<MimicEntry> entries; // topological order, substitution head first

    std::optional<std::string> replacement_for(const std::string& old_id) const;
};

class BundleStore {
public:
    BundleStore(fs::path root, const Clock& clock);

    // Content-addressed; re-uploading identical content returns the same id.
    Bundle upload_path(const fs::path& source);
    Bundle upload_tree(const FileTree& tree, bool root_is_file);

    // Stages each dep read-only under its alias in a fresh directory, runs
    // the command with /bin/sh, captures exactly the files the command wrote.
    Bundle run(const std::vector<std::pair<std::string, std::string>>& deps,
               const std::string& command);

    Bundle get(const std::string& ref) const; // exact id or unique prefix (>= 6 chars)
    std::string resolve(const std::string& ref) const;
    bool contains(const std::string& bundle_id) const;
    std::vector<Bundle> all() const;
    FileTree read_contents(const std::string& bundle_id) const;

    // Run bundles reachable from `ref` by reversed dependency edges, in
    // (topo level, bundle_id) order — dependencies always before dependents.
    std::vector<std::string> downstream_closure(const std::string& ref) const;

    // Re-executes every downstream run bundle with `new_ref` substituted for
    // `old_ref` (and replacements substituted transitively). Originals are
    // untouched; the returned mapping includes old -> new itself.
    MimicReport mimic(const std::string& old_ref, const std::string& new_ref);

    const fs::path& root() const { return root_; }

private:
    Bundle execute_run(Bundle bundle);
    Bundle load_meta(const std::string& bundle_id) const;
    void save_meta(const Bundle& b) const;
    std::uint64_t next_seq();
    std::string store_contents(const std::string& bundle_id, const FileTree& tree) const;

    fs::path root_;
    const Clock& clock_;
};

} // namespace ems
