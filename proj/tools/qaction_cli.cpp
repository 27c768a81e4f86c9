#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qaction/harness.hpp"

namespace {

struct CommandArgs {
    std::string config;
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, CommandArgs& args) {
    cmd->add_option("--config", args.config, "config file of section.key = value lines");
    cmd->add_option("--scenario", args.scenario, "built-in scenario id supplying defaults");
    cmd->add_option("--seed", args.seed, "overrides run.seed");
    cmd->add_option("--out", args.out, "output directory (overrides run.out and $QACTION_OUT_DIR)");
    cmd->add_option("--workers", args.workers, "worker threads for ensemble runs");
}

std::string scenario_help(qaction::Command command) {
    std::string s = "scenarios:";
    for (const auto& id : qaction::scenario_ids(command)) s += " " + id;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic-action quantum dynamics experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", QACTION_VERSION);

    CommandArgs args;
    const struct {
        qaction::Command command;
        const char* help;
    } commands[] = {
        {qaction::Command::evolve, "wave and Madelung-pair evolution with chain-equivalence distances"},
        {qaction::Command::sample, "lambda-source and action-deviation sampler statistics"},
        {qaction::Command::equivariance, "ensemble transport against |psi|^2 over a tau_Q sweep"},
        {qaction::Command::orderings, "Hermiticity and spectra of the operator orderings"},
    };
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(std::string(qaction::command_name(c.command)), c.help);
        sub->footer(scenario_help(c.command));
        add_common(sub, args);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qaction::kExitConfigError;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    qaction::ConfigSources sources;
    if (!args.config.empty()) sources.config_file = args.config;
    if (!args.scenario.empty()) sources.scenario = args.scenario;
    sources.seed = args.seed;
    if (!args.out.empty()) sources.out = args.out;
    sources.workers = args.workers;
    return qaction::run_command(qaction::parse_command(chosen->get_name()), sources, std::cout, std::cerr);
}
