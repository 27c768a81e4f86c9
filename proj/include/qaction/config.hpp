#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qaction/ensemble.hpp"
#include "qaction/evolution.hpp"
#include "qaction/hamiltonian.hpp"
#include "qaction/stochastic.hpp"

namespace qaction {

enum class Command { evolve, sample, equivariance, orderings };

std::string_view command_name(Command c);
Command parse_command(std::string_view name);

/// Flat `section.key -> value` map, ordered so echoes are deterministic.
using KeyValues = std::map<std::string, std::string>;

/// Parses `section.key = value` lines; `#` starts a comment, blank lines are
/// skipped. Throws ConfigError naming the line for malformed input,
/// duplicate or unknown keys.
KeyValues parse_config_text(std::string_view text, std::string_view origin = "<config>");
KeyValues load_config_file(const std::filesystem::path& path);

/// Every key the parser accepts.
const std::vector<std::string>& known_keys();

enum class StateKind { gaussian, eigenstate };

struct ScenarioConfig {
    Command command = Command::evolve;
    std::string id = "custom";

    Preset preset = Preset::harmonic;
    PresetParams params{};

    std::size_t grid_n = 0;
    double q_min = 0.0;
    double q_max = 0.0;

    double dt = 1e-3;
    double T = 1.0;
    std::vector<double> tau_q{1e-3};
    std::size_t snapshots = 10;  // output snapshots over [0, T]

    LambdaSource lambda{};
    double offset_cycles = 1.0;  // S0 = offset_cycles * 2 pi hbar

    StateKind state = StateKind::gaussian;
    std::size_t level = 0;
    GaussianPacket packet{};

    std::size_t ensemble_n = 0;
    std::size_t bins = 100;
    VelocityMode mode = VelocityMode::full;
    bool stratified = true;

    std::uint64_t seed = 0;
    std::filesystem::path out;
    unsigned workers = 1;

    KeyValues echo;  // resolved key/value pairs
};

/// Built-in defaults for (command, id). Throws ConfigError for unknown ids.
KeyValues scenario_defaults(Command command, std::string_view id);
std::vector<std::string> scenario_ids(Command command);

/// Keys that must be present once defaults and overrides are merged.
std::vector<std::string> required_keys(Command command);

struct ConfigSources {
    std::optional<std::filesystem::path> config_file;
    std::optional<std::string> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<unsigned> workers;
};

/// Output directory used when run.out is absent.
inline constexpr const char* kOutDirEnv = "QACTION_OUT_DIR";

/**
 * Merges scenario defaults, then the config file, then command-line
 * overrides, and validates the result for the command. Without a scenario
 * the file alone must supply every required key.
 */
ScenarioConfig resolve_config(Command command, const ConfigSources& sources);

/// Typed view of an already merged map; throws ConfigError on any problem.
ScenarioConfig interpret(Command command, const KeyValues& kv);

}  // namespace qaction
