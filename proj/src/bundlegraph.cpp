#include "ems/bundlegraph.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "ems/errors.hpp"
#include "ems/packaging.hpp"
#include "ems/proc.hpp"
#include "ems/sha1.hpp"

namespace ems {

using nlohmann::json;

const char* bundle_kind_name(BundleKind k) {
    return k == BundleKind::upload ? "upload" : "run";
}

const char* bundle_state_name(BundleState s) {
    switch (s) {
    case BundleState::created: return "created";
    case BundleState::staged: return "staged";
    case BundleState::running: return "running";
    case BundleState::ready: return "ready";
    case BundleState::failed: return "failed";
    }
    return "?";
}

namespace {

BundleState parse_bundle_state(const std::string& s) {
    for (BundleState v : {BundleState::created, BundleState::staged, BundleState::running,
                          BundleState::ready, BundleState::failed}) {
        if (s == bundle_state_name(v)) {
            return v;
        }
    }
    raise(errc::malformed_config, "unknown bundle state '" + s + "'");
}

std::string tree_hash(const FileTree& tree) {
    // Same canonical stream as experiment packages (empty script/metadata).
    return compute_pid(canonicalize("", tree, {})).hex;
}

} // namespace

std::optional<std::string> MimicReport::replacement_for(const std::string& old_id) const {
    for (const auto& e : entries) {
        if (e.old_id == old_id && !e.new_id.empty()) {
            return e.new_id;
        }
    }
    return std::nullopt;
}

BundleStore::BundleStore(fs::path root, const Clock& clock) : root_(std::move(root)), clock_(clock) {
    fs::create_directories(root_);
}

std::uint64_t BundleStore::next_seq() {
    fs::path file = root_ / "store.json";
    std::uint64_t seq = 1;
    if (fs::exists(file)) {
        seq = json::parse(read_file(file)).at("next_seq").get<std::uint64_t>();
    }
    json j;
    j["next_seq"] = seq + 1;
    atomic_write_file(file, j.dump());
    return seq;
}

void BundleStore::save_meta(const Bundle& b) const {
    json j;
    j["bundle_id"] = b.bundle_id;
    j["kind"] = bundle_kind_name(b.kind);
    json deps = json::array();
    for (const auto& d : b.deps) {
        deps.push_back({{"alias", d.alias}, {"bundle_id", d.bundle_id}});
    }
    j["deps"] = deps;
    j["command"] = b.command;
    j["state"] = bundle_state_name(b.state);
    j["contents_hash"] = b.contents_hash;
    j["root_is_file"] = b.root_is_file;
    j["seq"] = b.seq;
    j["created_at"] = b.created_at;
    if (b.exit_code) {
        j["exit_code"] = *b.exit_code;
    }
    atomic_write_file(root_ / b.bundle_id / "meta.json", j.dump(2) + "\n");
}

Bundle BundleStore::load_meta(const std::string& bundle_id) const {
    fs::path file = root_ / bundle_id / "meta.json";
    if (!fs::exists(file)) {
        raise(errc::unknown_bundle, "no bundle " + bundle_id);
    }
    json j = json::parse(read_file(file));
    Bundle b;
    b.bundle_id = j.at("bundle_id").get<std::string>();
    b.kind = j.at("kind").get<std::string>() == "upload" ? BundleKind::upload : BundleKind::run;
    for (const auto& d : j.at("deps")) {
        b.deps.push_back({d.at("alias").get<std::string>(), d.at("bundle_id").get<std::string>()});
    }
    b.command = j.at("command").get<std::string>();
    b.state = parse_bundle_state(j.at("state").get<std::string>());
    b.contents_hash = j.at("contents_hash").get<std::string>();
    b.root_is_file = j.at("root_is_file").get<bool>();
    b.seq = j.at("seq").get<std::uint64_t>();
    b.created_at = j.at("created_at").get<std::string>();
    if (j.contains("exit_code")) {
        b.exit_code = j.at("exit_code").get<int>();
    }
    return b;
}

std::string BundleStore::store_contents(const std::string& bundle_id, const FileTree& tree) const {
    write_tree(root_ / bundle_id / "contents", tree);
    return tree_hash(tree);
}

Bundle BundleStore::upload_tree(const FileTree& tree, bool root_is_file) {
    if (tree.empty()) {
        raise(errc::io_failure, "refusing to upload an empty tree");
    }
    if (root_is_file && tree.size() != 1) {
        raise(errc::io_failure, "single-file upload must contain exactly one file");
    }
    std::string id = tree_hash(tree);
    if (contains(id)) {
        return load_meta(id); // idempotent by content addressing
    }
    Bundle b;
    b.bundle_id = id;
    b.kind = BundleKind::upload;
    b.root_is_file = root_is_file;
    b.seq = next_seq();
    b.created_at = to_iso8601(clock_.now());
    b.contents_hash = store_contents(id, tree);
    b.state = BundleState::ready;
    save_meta(b);
    return b;
}

Bundle BundleStore::upload_path(const fs::path& source) {
    if (!fs::exists(source)) {
        raise(errc::io_failure, "no such file or directory: " + source.string());
    }
    if (fs::is_directory(source)) {
        FileTree tree = read_tree(source);
        if (tree.empty()) {
            raise(errc::io_failure, "directory " + source.string() + " contains no files");
        }
        return upload_tree(tree, false);
    }
    FileTree tree;
    tree[source.filename().generic_string()] = read_file(source);
    return upload_tree(tree, true);
}

bool BundleStore::contains(const std::string& bundle_id) const {
    return fs::exists(root_ / bundle_id / "meta.json");
}

std::string BundleStore::resolve(const std::string& ref) const {
    if (ref.size() == 40 && contains(ref)) {
        return ref;
    }
    if (ref.size() >= 6) {
        std::vector<std::string> matches;
        for (const auto& entry : fs::directory_iterator(root_)) {
            if (!entry.is_directory()) {
                continue;
            }
            std::string name = entry.path().filename().string();
            if (name.rfind(ref, 0) == 0 && contains(name)) {
                matches.push_back(name);
            }
        }
        if (matches.size() == 1) {
            return matches.front();
        }
        if (matches.size() > 1) {
            raise(errc::unknown_bundle, "ambiguous bundle prefix '" + ref + "'");
        }
    }
    raise(errc::unknown_bundle, "no bundle matching '" + ref + "'");
}

Bundle BundleStore::get(const std::string& ref) const {
    return load_meta(resolve(ref));
}

std::vector<Bundle> BundleStore::all() const {
    std::vector<Bundle> out;
    if (!fs::exists(root_)) {
        return out;
    }
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (entry.is_directory() && contains(entry.path().filename().string())) {
            out.push_back(load_meta(entry.path().filename().string()));
        }
    }
    std::sort(out.begin(), out.end(), [](const Bundle& a, const Bundle& b) { return a.seq < b.seq; });
    return out;
}

FileTree BundleStore::read_contents(const std::string& bundle_id) const {
    return read_tree(root_ / bundle_id / "contents");
}

namespace {

void stage_dependency(const fs::path& store_contents_dir, bool root_is_file, const fs::path& target) {
    if (root_is_file) {
        // Single file: expose as a file named by the alias.
        FileTree tree = read_tree(store_contents_dir);
        write_file(target, tree.begin()->second);
        ::chmod(target.c_str(), 0444);
        return;
    }
    copy_tree_over(store_contents_dir, target);
    for (const auto& entry : fs::recursive_directory_iterator(target)) {
        if (entry.is_regular_file()) {
            ::chmod(entry.path().c_str(), 0444);
        }
    }
}

} // namespace

Bundle BundleStore::run(const std::vector<std::pair<std::string, std::string>>& deps,
                        const std::string& command) {
    std::vector<BundleDep> resolved;
    std::set<std::string> aliases;
    for (const auto& [alias, ref] : deps) {
        if (alias.empty()) {
            raise(errc::duplicate_alias, "dependency alias must be non-empty");
        }
        if (!aliases.insert(alias).second) {
            raise(errc::duplicate_alias, "alias '" + alias + "' used twice");
        }
        std::string id;
        try {
            id = resolve(ref);
        } catch (const error&) {
            raise(errc::unknown_dependency, "dependency '" + ref + "' does not resolve to a bundle");
        }
        Bundle dep = load_meta(id);
        if (dep.state != BundleState::ready) {
            raise(errc::dependency_not_ready, "dependency " + id.substr(0, 8) + " is " +
                                                  bundle_state_name(dep.state) + ", not ready");
        }
        resolved.push_back({alias, id});
    }

    Bundle b;
    b.kind = BundleKind::run;
    b.deps = resolved;
    b.command = command;
    b.seq = next_seq();
    b.created_at = to_iso8601(clock_.now());
    {
        // Derivation hash; the sequence number keeps repeated runs distinct.
        Sha1 h;
        h.update("run");
        h.update("\0", 1);
        h.update(command);
        h.update("\0", 1);
        for (const auto& d : resolved) {
            h.update(d.alias);
            h.update("=");
            h.update(d.bundle_id);
            h.update("\0", 1);
        }
        h.update(std::to_string(b.seq));
        b.bundle_id = h.hex_digest();
    }
    b.state = BundleState::created;
    save_meta(b);
    return execute_run(std::move(b));
}

Bundle BundleStore::execute_run(Bundle bundle) {
    fs::path staging = root_ / ".staging" / bundle.bundle_id;
    fs::remove_all(staging);
    fs::create_directories(staging);

    std::set<std::string> staged_roots;
    for (const auto& d : bundle.deps) {
        Bundle dep = load_meta(d.bundle_id);
        stage_dependency(root_ / d.bundle_id / "contents", dep.root_is_file, staging / d.alias);
        staged_roots.insert(d.alias);
    }
    bundle.state = BundleState::staged;
    save_meta(bundle);

    SpawnOptions opts;
    opts.cwd = staging;
    opts.stdout_path = root_ / bundle.bundle_id / "stdout";
    opts.stderr_path = root_ / bundle.bundle_id / "stderr";
    pid_t pid = spawn_process({"/bin/sh", "-c", bundle.command}, opts);
    bundle.state = BundleState::running;
    save_meta(bundle);
    int exit_code = wait_process(pid);

    // The bundle contents are exactly the files the command wrote to its
    // working directory; staged dependencies are not part of the output.
    FileTree outputs;
    for (const auto& rel : list_files(staging)) {
        std::string root_part = rel.substr(0, rel.find('/'));
        if (staged_roots.count(root_part) > 0) {
            continue;
        }
        outputs[rel] = read_file(staging / rel);
    }
    bundle.contents_hash = store_contents(bundle.bundle_id, outputs);
    if (outputs.empty()) {
        fs::create_directories(root_ / bundle.bundle_id / "contents");
    }
    bundle.exit_code = exit_code;
    bundle.state = exit_code == 0 ? BundleState::ready : BundleState::failed;
    save_meta(bundle);
    fs::remove_all(staging);
    return bundle;
}

std::vector<std::string> BundleStore::downstream_closure(const std::string& ref) const {
    std::string source = resolve(ref);
    std::vector<Bundle> bundles = all();

    std::map<std::string, std::vector<std::string>> dependents; // dep id -> [dependent run ids]
    std::map<std::string, const Bundle*> by_id;
    for (const auto& b : bundles) {
        by_id[b.bundle_id] = &b;
        for (const auto& d : b.deps) {
            dependents[d.bundle_id].push_back(b.bundle_id);
        }
    }

    // Longest-path level from the source; parents always rank lower.
    std::map<std::string, std::size_t> level;
    level[source] = 0;
    std::vector<std::string> frontier{source};
    while (!frontier.empty()) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            for (const auto& dep_id : dependents[id]) {
                std::size_t lvl = level[id] + 1;
                auto it = level.find(dep_id);
                if (it == level.end() || it->second < lvl) {
                    level[dep_id] = lvl;
                    next.push_back(dep_id);
                }
            }
        }
        frontier = std::move(next);
    }
    level.erase(source);

    std::vector<std::string> closure;
    closure.reserve(level.size());
    for (const auto& [id, lvl] : level) {
        if (by_id.at(id)->kind == BundleKind::run) {
            closure.push_back(id);
        }
    }
    std::sort(closure.begin(), closure.end(), [&](const std::string& a, const std::string& b) {
        if (level.at(a) != level.at(b)) {
            return level.at(a) < level.at(b);
        }
        return a < b;
    });
    return closure;
}

MimicReport BundleStore::mimic(const std::string& old_ref, const std::string& new_ref) {
    std::string old_id = resolve(old_ref);
    std::string new_id = resolve(new_ref);
    Bundle replacement = load_meta(new_id);
    if (replacement.state != BundleState::ready) {
        raise(errc::dependency_not_ready, "substitute bundle " + new_id.substr(0, 8) + " is not ready");
    }

    MimicReport report;
    report.entries.push_back({old_id, new_id, "input"});
    std::map<std::string, std::string> mapping{{old_id, new_id}};
    std::set<std::string> broken;

    for (const std::string& run_id : downstream_closure(old_id)) {
        Bundle original = load_meta(run_id);
        bool blocked = false;
        std::vector<std::pair<std::string, std::string>> new_deps;
        for (const auto& d : original.deps) {
            if (broken.count(d.bundle_id) > 0) {
                blocked = true;
                break;
            }
            auto it = mapping.find(d.bundle_id);
            new_deps.emplace_back(d.alias, it == mapping.end() ? d.bundle_id : it->second);
        }
        if (blocked) {
            broken.insert(run_id);
            report.entries.push_back({run_id, "", "skipped"});
            continue;
        }
        Bundle recreated = run(new_deps, original.command);
        mapping[run_id] = recreated.bundle_id;
        if (recreated.state == BundleState::ready) {
            report.entries.push_back({run_id, recreated.bundle_id, "replaced"});
        } else {
            // The replacement exists but failed; dependents cannot run on it.
            broken.insert(run_id);
            report.entries.push_back({run_id, recreated.bundle_id, "failed"});
        }
    }
    return report;
}

} // namespace ems
