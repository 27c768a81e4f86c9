#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qaction/config.hpp"

namespace qaction {

enum ExitCode : int { kExitPass = 0, kExitToleranceFailure = 1, kExitConfigError = 2 };

struct CheckResult {
    std::string name;
    double value;
    std::string relation;  // "<", "<=", ">", "=="
    double threshold;
    bool pass;
};

CheckResult check_below(std::string name, double value, double threshold);
CheckResult check_above(std::string name, double value, double threshold);

struct RunReport {
    ScenarioConfig config;
    std::vector<CheckResult> checks;
    std::vector<std::filesystem::path> files;
    double wall_seconds = 0.0;

    bool passed() const;
    int exit_code() const { return passed() ? kExitPass : kExitToleranceFailure; }
};

/**
 * `<command>_manifest.json` in the output directory. The constructor writes
 * it with status "running" before any data file exists; finalize() rewrites
 * it with the check summary and status "pass" or "fail". A manifest left in
 * the running state marks an interrupted run.
 */
class RunManifest {
public:
    explicit RunManifest(const ScenarioConfig& config);
    void finalize(const RunReport& report) const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Wave, Madelung-pair and eigen-oracle densities plus chain distances.
RunReport cmd_evolve(const ScenarioConfig& config);
/// Lambda-source and action-deviation statistics.
RunReport cmd_sample(const ScenarioConfig& config);
/// Ensemble histograms against |psi|^2 over a tau_Q sweep.
RunReport cmd_equivariance(const ScenarioConfig& config);
/// Hermiticity defects and low spectra of the three operator orderings.
RunReport cmd_orderings(const ScenarioConfig& config);

RunReport run_scenario(const ScenarioConfig& config);

/// Resolves the configuration, runs the command, prints one line per check
/// and returns the exit code: 0 pass, 1 tolerance failure, 2 configuration
/// error. Never throws.
int run_command(Command command, const ConfigSources& sources, std::ostream& out, std::ostream& err);

}  // namespace qaction
