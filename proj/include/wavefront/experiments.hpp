#ifndef WAVEFRONT_EXPERIMENTS_HPP
#define WAVEFRONT_EXPERIMENTS_HPP

#include <string>
#include <utility>
#include <vector>

#include "wavefront/io.hpp"
#include "wavefront/model.hpp"

namespace wavefront {

/// Outcome of one named experiment: scalar metrics (already formatted),
/// named pass/fail checks, and the files written.  Everything in here is
/// deterministic for a given configuration, so reruns produce identical
/// artifacts byte for byte.
struct ExperimentReport {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> metrics;
    std::vector<std::pair<std::string, bool>> checks;
    std::vector<std::string> outputs;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.second) return false;
        return true;
    }

    void metric(const std::string& name, double value) {
        metrics.emplace_back(name, format_num(value));
    }
    void metric(const std::string& name, const std::string& value) {
        metrics.emplace_back(name, value);
    }
    void check(const std::string& name, bool pass) {
        checks.emplace_back(name, pass);
    }
};

/// Birth function assembled from the [model] block.
BirthFunction birth_from_config(const Config& cfg);

/// Runs the experiment named by experiment.kind, writing its artifacts
/// into output.dir.  Throws ConfigError for invalid parameter sets and
/// lets computational errors propagate.
ExperimentReport run_experiment(const Config& cfg);

/// Runs the base experiment over the grid declared in sweep.vary with
/// sweep.workers concurrent points.  Results are concatenated into
/// sweep.csv in grid order regardless of scheduling; per-point artifacts
/// land in numbered subdirectories.  Per-point failures are recorded and
/// the sweep continues.
ExperimentReport run_sweep(const Config& cfg);

/// Text rendering of a report: kind, status, checks, metrics, outputs.
std::string render_report(const ExperimentReport& rep);

/// Writes report.txt (the render above) and run_meta.txt (the effective
/// configuration echo) into the report's output directory.
void write_report_files(const ExperimentReport& rep, const Config& cfg);

} // namespace wavefront

#endif
