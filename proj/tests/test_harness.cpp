#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "qaction/errors.hpp"
#include "qaction/harness.hpp"

using namespace qaction;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "qaction_harness_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    const char* cli = std::getenv("QACTION_CLI_PATH");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string("\"") + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

int run_in_process(Command c, const ConfigSources& src, std::string* text = nullptr) {
    std::ostringstream out, err;
    const int code = run_command(c, src, out, err);
    if (text) *text = out.str() + err.str();
    return code;
}

const char* kSmallEvolve = R"(system.preset = free
grid.n = 256
grid.q_min = -7
grid.q_max = 7
time.dt = 1e-3
time.T = 0.02
time.snapshots = 2
lambda.hbar = 1
state.kind = gaussian
)";

}  // namespace

TEST_CASE("configuration problems exit with code 2") {
    const fs::path dir = scratch("config_errors");
    std::string small = kSmallEvolve;
    small.erase(small.find("grid.n = 256\n"), 13);
    ConfigSources src;
    src.config_file = write_file(dir / "missing.cfg", small);
    std::string text;
    CHECK(run_in_process(Command::evolve, src, &text) == kExitConfigError);
    CHECK(text.find("grid.n") != std::string::npos);

    src = {};
    src.scenario = "bohmian";
    src.config_file = write_file(dir / "zero.cfg", "ensemble.n = 0\n");
    CHECK(run_in_process(Command::equivariance, src) == kExitConfigError);

    src = {};
    src.scenario = "no_such_scenario";
    CHECK(run_in_process(Command::sample, src) == kExitConfigError);
    CHECK(run_in_process(Command::sample, ConfigSources{}) == kExitConfigError);
    CHECK_FALSE(fs::exists(dir / "evolve_manifest.json"));
}

TEST_CASE("a small evolve run writes data and a passing manifest") {
    const fs::path dir = scratch("evolve");
    ConfigSources src;
    src.config_file = write_file(dir / "small.cfg", kSmallEvolve);
    src.out = dir / "out";
    std::string text;
    CHECK(run_in_process(Command::evolve, src, &text) == kExitPass);
    CHECK(text.find("PASS chain_l2") != std::string::npos);

    const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "evolve_manifest.json"));
    CHECK(manifest["status"] == "pass");
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["command"] == "evolve");
    CHECK(manifest["checks"].size() == 4);
    for (const auto& f : manifest["files"]) CHECK(fs::exists(dir / "out" / f.get<std::string>()));

    const std::string density = slurp(dir / "out" / "evolve_density.csv");
    CHECK(density.rfind("# ", 0) == 0);
    CHECK(density.find("t,q,wave_density,madelung_density,oracle_density\n") != std::string::npos);
    const std::string distances = slurp(dir / "out" / "evolve_distances.csv");
    CHECK(distances.find("t,norm_drift,oracle_l2,chain_l2,phase_gradient_distance,offset_deviation,energy\n") !=
          std::string::npos);
}

TEST_CASE("a violated tolerance exits with code 1 and a failing manifest") {
    const fs::path dir = scratch("tolerance");
    std::string coarse = kSmallEvolve;
    coarse.replace(coarse.find("time.dt = 1e-3"), 14, "time.dt = 0.1");
    coarse.replace(coarse.find("time.T = 0.02"), 13, "time.T = 1.0");
    coarse += "state.p0 = 1\n";
    ConfigSources src;
    src.config_file = write_file(dir / "coarse.cfg", coarse);
    src.out = dir / "out";
    std::string text;
    CHECK(run_in_process(Command::evolve, src, &text) == kExitToleranceFailure);
    CHECK(text.find("FAIL ") != std::string::npos);
    CHECK(nlohmann::json::parse(slurp(dir / "out" / "evolve_manifest.json"))["status"] == "fail");
}

TEST_CASE("manifest starts in the running state") {
    const fs::path dir = scratch("manifest");
    KeyValues kv = scenario_defaults(Command::sample, "binary");
    kv["run.out"] = (dir / "out").string();
    const ScenarioConfig cfg = interpret(Command::sample, kv);
    const RunManifest m(cfg);
    const auto j = nlohmann::json::parse(slurp(m.path()));
    CHECK(j["status"] == "running");
    CHECK(j["scenario"] == "binary");
    CHECK(m.path().filename() == "sample_manifest.json");
}

TEST_CASE("check helpers") {
    CHECK(check_below("x", 1.0, 2.0).pass);
    CHECK_FALSE(check_below("x", 2.0, 2.0).pass);
    CHECK(check_above("x", 3.0, 2.0).pass);
    CHECK_FALSE(check_above("x", std::nan(""), 2.0).pass);
    CHECK_FALSE(check_below("x", std::nan(""), 2.0).pass);
}

TEST_CASE("CLI exit codes") {
    const fs::path dir = scratch("cli");
    CHECK(run_cli("--version", dir / "version.log") == 0);
    CHECK(slurp(dir / "version.log").find(QACTION_VERSION) != std::string::npos);
    CHECK(run_cli("evolve", dir / "none.log") == 2);
    CHECK(run_cli("evolve --scenario nope", dir / "nope.log") == 2);
    CHECK(run_cli("frobnicate", dir / "bad.log") == 2);
    write_file(dir / "zero.cfg", "ensemble.n = 0\n");
    CHECK(run_cli("equivariance --scenario bohmian --config \"" + (dir / "zero.cfg").string() + "\"", dir / "zero.log") ==
          2);
}

TEST_CASE("reruns with different worker counts are byte-identical") {
    const fs::path dir = scratch("determinism");
    write_file(dir / "eq.cfg", "ensemble.n = 3000\ntime.T = 0.1\ntime.snapshots = 2\ntime.tau_q = 1e-2,1e-3\n");
    const std::string eq_args = "equivariance --scenario free_gaussian --seed 7 --config \"" + (dir / "eq.cfg").string() + "\"";
    REQUIRE(run_cli(eq_args + " --workers 1 --out \"" + (dir / "a").string() + "\"", dir / "a.log") != 2);
    REQUIRE(run_cli(eq_args + " --workers 3 --out \"" + (dir / "b").string() + "\"", dir / "b.log") != 2);

    write_file(dir / "s.cfg", "ensemble.n = 20000\n");
    const std::string s_args = "sample --scenario sphere --config \"" + (dir / "s.cfg").string() + "\"";
    REQUIRE(run_cli(s_args + " --seed 7 --workers 1 --out \"" + (dir / "a").string() + "\"", dir / "sa.log") != 2);
    REQUIRE(run_cli(s_args + " --seed 7 --workers 2 --out \"" + (dir / "b").string() + "\"", dir / "sb.log") != 2);

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        if (entry.path().extension() != ".csv") continue;
        const fs::path twin = dir / "b" / entry.path().filename();
        REQUIRE(fs::exists(twin));
        CHECK_MESSAGE(slurp(entry.path()) == slurp(twin), entry.path().filename().string());
        ++compared;
    }
    CHECK(compared >= 7);

    // A different seed changes the data.
    REQUIRE(run_cli(s_args + " --seed 8 --out \"" + (dir / "c").string() + "\"", dir / "sc.log") != 2);
    CHECK(slurp(dir / "a" / "sample_summary.csv") != slurp(dir / "c" / "sample_summary.csv"));
}

TEST_CASE("orderings output carries the constant-g control") {
    const fs::path dir = scratch("orderings");
    ConfigSources src;
    src.scenario = "variable_mass";
    src.config_file = write_file(dir / "small.cfg", "grid.n = 96\n");
    src.out = dir / "out";
    CHECK(run_in_process(Command::orderings, src) == kExitPass);
    const std::string csv = slurp(dir / "out" / "orderings.csv");
    CHECK(csv.find("system,ordering,hermiticity_defect,relative_defect,max_abs_imag_eigenvalue,E0,E1,E2,E3,E4\n") !=
          std::string::npos);
    std::size_t rows = 0;
    for (std::size_t pos = csv.find("\nconstant_g_control,"); pos != std::string::npos;
         pos = csv.find("\nconstant_g_control,", pos + 1))
        ++rows;
    CHECK(rows >= 2);
}
