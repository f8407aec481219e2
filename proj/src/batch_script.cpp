#include "ems/batch_script.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace ems {

std::string format_quantity(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string s(buf);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') {
        s.pop_back();
    }
    return s;
}

std::string format_hms(int seconds) {
    int h = seconds / 3600;
    int m = (seconds % 3600) / 60;
    int s = seconds % 60;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", h, m, s);
    return buf;
}

namespace {

std::string shell_join(const std::vector<std::string>& argv) {
    std::string out;
    for (std::size_t i = 0; i < argv.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        bool plain = !argv[i].empty();
        for (char c : argv[i]) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
                  c == '/' || c == '=' || c == ':')) {
                plain = false;
                break;
            }
        }
        if (plain) {
            out += argv[i];
        } else {
            out += '\'';
            for (char c : argv[i]) {
                if (c == '\'') {
                    out += "'\\''";
                } else {
                    out += c;
                }
            }
            out += '\'';
        }
    }
    return out;
}

} // namespace

std::string emit_batch_script(const TaskSpec& task, Scheduler scheduler) {
    const ResourceRequest& r = task.resources;
    std::string name = task.pid.substr(0, 8) + "_" + std::to_string(task.job_index);
    std::ostringstream out;
    out << "#!/bin/bash\n";
    if (scheduler == Scheduler::slurm) {
        out << "#SBATCH --job-name=" << name << "\n";
        if (!task.workdir.empty()) {
            out << "#SBATCH --chdir=" << task.workdir.string() << "\n";
        }
        out << "#SBATCH --cpus-per-task=" << r.cpus << "\n";
        out << "#SBATCH --mem=" << format_quantity(r.memory_gb) << "G\n";
        if (r.gpus > 0) {
            out << "#SBATCH --gres=gpu:" << r.gpus << "\n";
        }
        out << "#SBATCH --time=" << format_hms(r.max_runtime_s) << "\n";
        for (const auto& token : r.passthrough) {
            out << "#SBATCH " << token << "\n";
        }
    } else {
        out << "#$ -N " << name << "\n";
        if (!task.workdir.empty()) {
            out << "#$ -wd " << task.workdir.string() << "\n";
        }
        out << "#$ -pe smp " << r.cpus << "\n";
        out << "#$ -l h_vmem=" << format_quantity(r.memory_gb) << "G\n";
        if (r.gpus > 0) {
            out << "#$ -l gpu=" << r.gpus << "\n";
        }
        out << "#$ -l h_rt=" << format_hms(r.max_runtime_s) << "\n";
        for (const auto& token : r.passthrough) {
            out << "#$ " << token << "\n";
        }
    }
    out << "\n" << shell_join(task.command) << "\n";
    return out.str();
}

} // namespace ems
