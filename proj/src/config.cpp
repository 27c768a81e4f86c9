#include "qaction/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "qaction/errors.hpp"

namespace qaction {

std::string_view command_name(Command c) {
    switch (c) {
        case Command::evolve: return "evolve";
        case Command::sample: return "sample";
        case Command::equivariance: return "equivariance";
        case Command::orderings: return "orderings";
    }
    return "unknown";
}

Command parse_command(std::string_view name) {
    for (Command c : {Command::evolve, Command::sample, Command::equivariance, Command::orderings}) {
        if (command_name(c) == name) return c;
    }
    throw ConfigError(fmt::format("unknown command '{}'", name));
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "scenario.id",
        "system.preset", "system.mass", "system.omega", "system.beta", "system.a0", "system.a1",
        "grid.n", "grid.q_min", "grid.q_max",
        "time.dt", "time.T", "time.tau_q", "time.snapshots",
        "lambda.kind", "lambda.hbar", "lambda.width",
        "madelung.offset_cycles",
        "state.kind", "state.level", "state.q0", "state.p0", "state.sigma", "state.chirp",
        "ensemble.n", "ensemble.bins", "ensemble.mode", "ensemble.stratified",
        "run.seed", "run.out", "run.workers",
    };
    return keys;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_known(std::string_view key) {
    const auto& keys = known_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

double parse_double(const KeyValues& kv, const std::string& key) {
    const std::string& text = kv.at(key);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, text));
    }
    return value;
}

// Accepts integral values written either as integers or in exponent form (1e5).
std::uint64_t parse_count(const KeyValues& kv, const std::string& key) {
    const std::string& text = kv.at(key);
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec == std::errc{} && ptr == end) return value;
    const double d = parse_double(kv, key);
    if (d < 0.0 || d != std::floor(d) || d > 9.0e15) {
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
    }
    return static_cast<std::uint64_t>(d);
}

std::vector<double> parse_list(const KeyValues& kv, const std::string& key) {
    std::vector<double> out;
    std::string_view rest = kv.at(key);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item(trim(rest.substr(0, comma)));
        KeyValues one{{key, item}};
        out.push_back(parse_double(one, key));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
    return out;
}

bool parse_bool(const KeyValues& kv, const std::string& key) {
    const std::string& v = kv.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

bool is_multiple(double big, double small) {
    const double r = big / small;
    return r >= 1.0 - 1e-9 && std::abs(r - std::round(r)) <= 1e-9 * r;
}

}  // namespace

KeyValues parse_config_text(std::string_view text, std::string_view origin) {
    KeyValues kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("{}:{}: expected 'section.key = value'", origin, line_no));
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.find('.') == std::string::npos || value.empty()) {
            throw ConfigError(fmt::format("{}:{}: expected 'section.key = value'", origin, line_no));
        }
        if (!is_known(key)) throw ConfigError(fmt::format("{}:{}: unknown key '{}'", origin, line_no, key));
        if (!kv.emplace(key, value).second) {
            throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", origin, line_no, key));
        }
    }
    return kv;
}

KeyValues load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

namespace {

KeyValues free_gaussian_system() {
    return {{"system.preset", "free"}, {"grid.n", "701"}, {"grid.q_min", "-7"}, {"grid.q_max", "7"},
            {"state.kind", "gaussian"}, {"state.q0", "0"}, {"state.p0", "0"}, {"state.sigma", "1"}};
}

// Coherent state of the unit oscillator displaced to q0 = 1; the domain is
// skewed so both tails stay above the node threshold with the walls far away.
KeyValues harmonic_coherent_system() {
    return {{"system.preset", "harmonic"}, {"grid.n", "501"}, {"grid.q_min", "-4.2"}, {"grid.q_max", "6.1"},
            {"state.kind", "gaussian"}, {"state.q0", "1"}, {"state.p0", "0"},
            {"state.sigma", "0.70710678118654752"}};
}

KeyValues merged(KeyValues base, const KeyValues& extra) {
    for (const auto& [k, v] : extra) base[k] = v;
    return base;
}

}  // namespace

std::vector<std::string> scenario_ids(Command command) {
    switch (command) {
        case Command::evolve: return {"harmonic_stationary", "harmonic_coherent", "free_gaussian"};
        case Command::sample: return {"binary", "sphere", "smeared"};
        case Command::equivariance: return {"free_gaussian", "harmonic_coherent", "bohmian"};
        case Command::orderings: return {"variable_mass", "constant_mass"};
    }
    return {};
}

KeyValues scenario_defaults(Command command, std::string_view id) {
    const KeyValues common = {{"scenario.id", std::string(id)}, {"lambda.hbar", "1"}, {"run.seed", "1"}};
    switch (command) {
        case Command::evolve: {
            const KeyValues timing = {{"time.dt", "1e-3"}, {"time.T", "0.5"}, {"time.snapshots", "5"},
                                      {"madelung.offset_cycles", "1"}};
            if (id == "harmonic_stationary") {
                return merged(merged(common, timing), {{"system.preset", "harmonic"}, {"grid.n", "369"},
                                                        {"grid.q_min", "-4.6"}, {"grid.q_max", "4.6"},
                                                        {"state.kind", "eigenstate"}, {"state.level", "0"}});
            }
            if (id == "harmonic_coherent") return merged(merged(common, timing), harmonic_coherent_system());
            if (id == "free_gaussian") return merged(merged(common, timing), free_gaussian_system());
            break;
        }
        case Command::sample: {
            const KeyValues base = merged(common, {{"ensemble.n", "1000000"}, {"ensemble.bins", "40"}});
            if (id == "binary") return merged(base, {{"lambda.kind", "binary"}});
            if (id == "sphere") return merged(base, {{"lambda.kind", "sphere"}});
            if (id == "smeared") return merged(base, {{"lambda.kind", "smeared"}, {"lambda.width", "0.25"}});
            break;
        }
        case Command::equivariance: {
            const KeyValues sweep = {{"time.dt", "1e-3"}, {"time.T", "1"}, {"time.tau_q", "1e-2,1e-3,1e-4"},
                                     {"time.snapshots", "10"}, {"lambda.kind", "binary"},
                                     {"ensemble.n", "100000"}, {"ensemble.bins", "100"},
                                     {"ensemble.mode", "full"}};
            if (id == "free_gaussian") return merged(merged(common, sweep), free_gaussian_system());
            if (id == "harmonic_coherent") return merged(merged(common, sweep), harmonic_coherent_system());
            if (id == "bohmian") {
                return merged(merged(merged(common, sweep), harmonic_coherent_system()),
                              {{"time.tau_q", "1e-3"}, {"ensemble.mode", "bohmian"}});
            }
            break;
        }
        case Command::orderings: {
            const KeyValues grid = {{"grid.n", "512"}, {"grid.q_min", "-10"}, {"grid.q_max", "10"}};
            if (id == "variable_mass") {
                return merged(merged(common, grid), {{"system.preset", "variable_mass"}, {"system.beta", "0.3"}});
            }
            if (id == "constant_mass") return merged(merged(common, grid), {{"system.preset", "harmonic"}});
            break;
        }
    }
    throw ConfigError(fmt::format("unknown scenario '{}' for command '{}'", id, command_name(command)));
}

std::vector<std::string> required_keys(Command command) {
    const std::vector<std::string> system = {"system.preset", "grid.n", "grid.q_min", "grid.q_max"};
    std::vector<std::string> keys;
    switch (command) {
        case Command::evolve:
            keys = system;
            keys.insert(keys.end(), {"time.dt", "time.T", "lambda.hbar", "state.kind"});
            break;
        case Command::sample:
            keys = {"lambda.kind", "lambda.hbar", "ensemble.n", "run.seed"};
            break;
        case Command::equivariance:
            keys = system;
            keys.insert(keys.end(), {"time.dt", "time.T", "time.tau_q", "lambda.kind", "lambda.hbar", "state.kind",
                                     "ensemble.n", "run.seed"});
            break;
        case Command::orderings:
            keys = system;
            keys.push_back("lambda.hbar");
            break;
    }
    return keys;
}

ScenarioConfig interpret(Command command, const KeyValues& kv) {
    for (const auto& [k, v] : kv) {
        if (!is_known(k)) throw ConfigError(fmt::format("unknown key '{}'", k));
    }
    for (const auto& key : required_keys(command)) {
        if (!kv.count(key)) throw ConfigError(fmt::format("missing required key '{}'", key));
    }
    auto has = [&](const char* key) { return kv.count(key) > 0; };

    ScenarioConfig c;
    c.command = command;
    c.echo = kv;
    if (has("scenario.id")) c.id = kv.at("scenario.id");

    if (has("system.preset")) c.preset = parse_preset(kv.at("system.preset"));
    if (c.preset == Preset::custom) throw ConfigError("system.preset: custom systems cannot be configured from text");
    if (has("system.mass")) c.params.mass = parse_double(kv, "system.mass");
    if (has("system.omega")) c.params.omega = parse_double(kv, "system.omega");
    if (has("system.beta")) c.params.beta = parse_double(kv, "system.beta");
    if (has("system.a0")) c.params.a0 = parse_double(kv, "system.a0");
    if (has("system.a1")) c.params.a1 = parse_double(kv, "system.a1");
    if (!(c.params.mass > 0.0)) throw ConfigError("system.mass must be positive");
    if (c.params.beta < 0.0) throw ConfigError("system.beta must be non-negative");

    if (has("grid.n")) {
        c.grid_n = parse_count(kv, "grid.n");
        c.q_min = parse_double(kv, "grid.q_min");
        c.q_max = parse_double(kv, "grid.q_max");
        build_grid(c.grid_n, c.q_min, c.q_max);
    }

    if (has("time.dt")) c.dt = parse_double(kv, "time.dt");
    if (has("time.T")) c.T = parse_double(kv, "time.T");
    if (has("time.tau_q")) c.tau_q = parse_list(kv, "time.tau_q");
    if (has("time.snapshots")) c.snapshots = parse_count(kv, "time.snapshots");
    if (!(c.dt > 0.0)) throw ConfigError("time.dt must be positive");
    if (!(c.T > 0.0)) throw ConfigError("time.T must be positive");
    if (c.snapshots == 0) throw ConfigError("time.snapshots must be positive");

    if (has("lambda.kind")) c.lambda.kind = parse_lambda_kind(kv.at("lambda.kind"));
    if (has("lambda.hbar")) c.lambda.hbar = parse_double(kv, "lambda.hbar");
    if (has("lambda.width")) c.lambda.width = parse_double(kv, "lambda.width");
    validate(c.lambda);
    if (has("madelung.offset_cycles")) c.offset_cycles = parse_double(kv, "madelung.offset_cycles");

    if (has("state.kind")) {
        const std::string& kind = kv.at("state.kind");
        if (kind == "gaussian") {
            c.state = StateKind::gaussian;
        } else if (kind == "eigenstate") {
            c.state = StateKind::eigenstate;
        } else {
            throw ConfigError(fmt::format("state.kind: unknown kind '{}'", kind));
        }
    }
    if (has("state.level")) c.level = parse_count(kv, "state.level");
    if (has("state.q0")) c.packet.q0 = parse_double(kv, "state.q0");
    if (has("state.p0")) c.packet.p0 = parse_double(kv, "state.p0");
    if (has("state.sigma")) c.packet.sigma = parse_double(kv, "state.sigma");
    if (has("state.chirp")) c.packet.chirp = parse_double(kv, "state.chirp");
    if (!(c.packet.sigma > 0.0)) throw ConfigError("state.sigma must be positive");

    if (has("ensemble.n")) c.ensemble_n = parse_count(kv, "ensemble.n");
    if (has("ensemble.bins")) c.bins = parse_count(kv, "ensemble.bins");
    if (has("ensemble.mode")) {
        const std::string& mode = kv.at("ensemble.mode");
        if (mode == "full") {
            c.mode = VelocityMode::full;
        } else if (mode == "bohmian") {
            c.mode = VelocityMode::bohmian;
        } else {
            throw ConfigError(fmt::format("ensemble.mode: unknown mode '{}'", mode));
        }
    }
    if (has("ensemble.stratified")) c.stratified = parse_bool(kv, "ensemble.stratified");
    if (c.bins == 0) throw ConfigError("ensemble.bins must be positive");

    if (has("run.seed")) c.seed = parse_count(kv, "run.seed");
    if (has("run.workers")) c.workers = static_cast<unsigned>(parse_count(kv, "run.workers"));
    if (c.workers == 0) throw ConfigError("run.workers must be positive");
    if (has("run.out")) {
        c.out = kv.at("run.out");
    } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
        c.out = env;
    } else {
        c.out = "qaction_out";
    }
    c.lambda.seed = c.seed;

    // Command-specific consistency.
    if (command == Command::evolve || command == Command::equivariance) {
        if (!is_multiple(c.T, c.dt)) throw ConfigError("time.T must be a multiple of time.dt");
        const auto steps = static_cast<std::size_t>(std::llround(c.T / c.dt));
        if (steps % c.snapshots != 0) throw ConfigError("time.snapshots must divide the number of time steps");
        if (c.state == StateKind::eigenstate && c.level >= c.grid_n) {
            throw ConfigError("state.level must be below grid.n");
        }
    }
    if (command == Command::evolve && c.grid_n > SpectralDecomposition::kMaxSize) {
        throw ConfigError(fmt::format("grid.n must be at most {} for the eigen oracle", SpectralDecomposition::kMaxSize));
    }
    if (command == Command::sample || command == Command::equivariance) {
        if (c.ensemble_n == 0) throw ConfigError("ensemble.n must be positive");
        if (c.ensemble_n > 0xffffffffull) throw ConfigError("ensemble.n must fit in 32 bits");
    }
    if (command == Command::equivariance) {
        for (double tau : c.tau_q) {
            if (!(tau > 0.0)) throw ConfigError("time.tau_q entries must be positive");
            if (!is_multiple(c.dt, tau) && !is_multiple(tau, c.dt)) {
                throw ConfigError(fmt::format("time.tau_q = {} and time.dt must divide one another", tau));
            }
            if (!is_multiple(c.T, tau)) throw ConfigError(fmt::format("time.T must be a multiple of tau_q = {}", tau));
        }
    }
    return c;
}

ScenarioConfig resolve_config(Command command, const ConfigSources& sources) {
    if (!sources.scenario && !sources.config_file) {
        throw ConfigError("either --scenario or --config is required");
    }
    KeyValues kv;
    if (sources.scenario) kv = scenario_defaults(command, *sources.scenario);
    if (sources.config_file) {
        for (const auto& [k, v] : load_config_file(*sources.config_file)) kv[k] = v;
    }
    if (sources.seed) kv["run.seed"] = std::to_string(*sources.seed);
    if (sources.out) kv["run.out"] = sources.out->string();
    if (sources.workers) kv["run.workers"] = std::to_string(*sources.workers);
    return interpret(command, kv);
}

}  // namespace qaction
