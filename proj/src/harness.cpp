#include "qaction/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include "json.hpp"

#include "qaction/errors.hpp"
#include "qaction/madelung.hpp"

namespace qaction {

CheckResult check_below(std::string name, double value, double threshold) {
    return {std::move(name), value, "<", threshold, value < threshold};
}

CheckResult check_above(std::string name, double value, double threshold) {
    return {std::move(name), value, ">", threshold, value > threshold};
}

bool RunReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

// CSV file: `#` metadata lines, one header line, then rows. Metadata holds
// only run-invariant facts so reruns are byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const ScenarioConfig& config, std::vector<std::string> columns,
              const std::vector<std::string>& notes)
        : path_(path), out_(path, std::ios::binary), width_(columns.size()) {
        if (!out_) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
        out_ << "# qaction " << QACTION_VERSION << "\n";
        out_ << "# command " << command_name(config.command) << ", scenario " << config.id << "\n";
        out_ << "# seed " << config.seed << "\n";
        for (const auto& note : notes) out_ << "# " << note << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw ShapeError("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t width_;
};

std::string units_note(const ScenarioConfig& c) {
    return fmt::format("units: hbar_eff = {}, mass = {}, omega = {}; q in length units, t in time units",
                       num(c.lambda.hbar), num(c.params.mass), num(c.params.omega));
}

WaveState initial_state(const ScenarioConfig& c, const GridSpec& grid, const QuantumOperator& H,
                        const SpectralDecomposition* oracle) {
    if (c.state == StateKind::gaussian) return gaussian_state(grid, c.packet, c.lambda.hbar);
    if (oracle != nullptr) return WaveState{oracle->eigenstate(c.level, grid), c.lambda.hbar, 0.0};
    return WaveState{SpectralDecomposition(H).eigenstate(c.level, grid), c.lambda.hbar, 0.0};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

RunManifest::RunManifest(const ScenarioConfig& config) {
    std::filesystem::create_directories(config.out);
    path_ = config.out / fmt::format("{}_manifest.json", command_name(config.command));
    nlohmann::json j;
    j["status"] = "running";
    j["command"] = command_name(config.command);
    j["scenario"] = config.id;
    j["version"] = QACTION_VERSION;
    j["config"] = config.echo;
    std::ofstream(path_) << j.dump(2) << "\n";
}

void RunManifest::finalize(const RunReport& report) const {
    nlohmann::json j;
    j["status"] = report.passed() ? "pass" : "fail";
    j["command"] = command_name(report.config.command);
    j["scenario"] = report.config.id;
    j["version"] = QACTION_VERSION;
    j["config"] = report.config.echo;
    j["wall_seconds"] = report.wall_seconds;
    j["exit_code"] = report.exit_code();
    auto& checks = j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                          {"threshold", c.threshold}, {"pass", c.pass}});
    }
    auto& files = j["files"] = nlohmann::json::array();
    for (const auto& f : report.files) files.push_back(f.filename().string());
    std::ofstream(path_) << j.dump(2) << "\n";
}

RunReport cmd_evolve(const ScenarioConfig& c) {
    const auto start = Clock::now();
    const RunManifest manifest(c);
    RunReport report{c, {}, {}, 0.0};

    const GridSpec grid = build_grid(c.grid_n, c.q_min, c.q_max);
    const ClassicalSpec spec = make_preset(c.preset, c.params);
    validate_on_grid(spec, grid);
    const double hbar = c.lambda.hbar;
    const QuantumOperator H = build_quantum_hamiltonian(spec, grid, hbar);
    const SpectralDecomposition oracle(H);
    const WaveState psi0 = initial_state(c, grid, H, &oracle);

    const auto steps = static_cast<std::size_t>(std::llround(c.T / c.dt));
    const std::size_t per = steps / c.snapshots;
    const std::vector<WaveState> waves = record_trajectory(psi0, H, c.dt, per, c.snapshots);

    // The pair runs on its own, finer step bounded by the diffusion limit.
    const double interval = static_cast<double>(per) * c.dt;
    const double bound = madelung_stability_bound(spec, grid, hbar);
    const auto substeps = static_cast<std::size_t>(std::ceil(interval / bound * (1.0 + 1e-12)));
    const double dt_pair = interval / static_cast<double>(substeps);
    const double S0 = c.offset_cycles * 2.0 * std::numbers::pi * hbar;
    PhasePair pair = make_pair(psi0, grid, S0);

    const std::filesystem::path density_path = c.out / "evolve_density.csv";
    const std::filesystem::path distance_path = c.out / "evolve_distances.csv";
    const std::vector<std::string> notes = {
        units_note(c),
        fmt::format("preset {}, grid n = {} on [{}, {}], dt = {}, madelung dt = {}, S0 = {}", preset_name(c.preset),
                    c.grid_n, num(c.q_min), num(c.q_max), num(c.dt), num(dt_pair), num(S0))};
    CsvWriter density(density_path, c, {"t", "q", "wave_density", "madelung_density", "oracle_density"}, notes);
    CsvWriter distance(distance_path, c,
                       {"t", "norm_drift", "oracle_l2", "chain_l2", "phase_gradient_distance", "offset_deviation",
                        "energy"},
                       notes);

    const double norm0 = norm2(psi0, grid);
    double worst_norm = 0.0, worst_oracle = 0.0, worst_chain = 0.0, worst_offset = 0.0;
    for (std::size_t k = 0; k <= c.snapshots; ++k) {
        if (k > 0) pair = evolve_pair(pair, spec, grid, dt_pair, substeps);
        const WaveState& wave = waves[k];
        const WaveState exact = oracle.propagate(psi0, wave.t);
        const RealField rho = abs2(wave.psi);
        const RealField rho_pair = pair_density(pair);
        const RealField rho_exact = abs2(exact.psi);
        for (std::size_t i = 0; i < grid.n(); ++i) {
            density.row({num(wave.t), num(grid.point(i)), num(rho[i]), num(rho_pair[i]), num(rho_exact[i])});
        }
        const double drift = std::abs(norm2(wave, grid) - norm0);
        const double oracle_l2 = l2_distance(wave.psi, exact.psi, grid);
        const ChainDistance chain = chain_distance(pair, wave, grid);
        const double offset = check_phase_offset(pair).max_deviation;
        distance.row({num(wave.t), num(drift), num(oracle_l2), num(chain.density_l2), num(chain.phase_gradient),
                      num(offset), num(energy_expectation(wave, H))});
        worst_norm = std::max(worst_norm, drift);
        worst_oracle = std::max(worst_oracle, oracle_l2);
        worst_chain = std::max(worst_chain, chain.density_l2);
        worst_offset = std::max(worst_offset, offset);
    }
    report.files = {density_path, distance_path};
    report.checks = {check_below("chain_l2", worst_chain, 1e-3), check_below("norm_drift", worst_norm, 1e-10),
                     check_below("oracle_l2", worst_oracle, 1e-4), check_below("offset_deviation", worst_offset, 1e-4)};
    report.wall_seconds = seconds_since(start);
    manifest.finalize(report);
    return report;
}

RunReport cmd_sample(const ScenarioConfig& c) {
    const auto start = Clock::now();
    const RunManifest manifest(c);
    RunReport report{c, {}, {}, 0.0};

    const LambdaSource& src = c.lambda;
    const std::size_t n = c.ensemble_n;
    const double dn = static_cast<double>(n);
    const double hbar = src.hbar;

    double sign_sum = 0.0, abs_sum = 0.0, abs_min = INFINITY, abs_max = 0.0, abs_exact_err = 0.0;
    double dev_sum = 0.0, dev_sq = 0.0, norm_sum = 0.0, norm_sq = 0.0;
    double z_sum = 0.0, z2_sum = 0.0, z4_sum = 0.0;
    std::size_t violations = 0, positives = 0;
    RealField normalized(n);
    RealField magnitudes(n);
    RealField zs;
    if (src.kind == LambdaKind::sphere) zs.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<std::uint32_t>(i);
        CounterRng lrng(c.seed, StreamTag::sampler, id);
        const double lambda = sample_lambda(src, lrng);
        if (src.kind == LambdaKind::sphere) {
            CounterRng zrng(c.seed, StreamTag::sampler, id);
            const double z = sample_sphere_point(1.0, zrng).z;
            zs[i] = z;
            z_sum += z;
            z2_sum += z * z;
            z4_sum += z * z * z * z;
        }
        CounterRng drng(c.seed, StreamTag::action_deviation, id);
        const double dev = sample_action_deviation(lambda, drng);

        const double mag = std::abs(lambda);
        sign_sum += lambda > 0.0 ? 1.0 : -1.0;
        positives += lambda > 0.0 ? 1 : 0;
        abs_sum += mag;
        abs_min = std::min(abs_min, mag);
        abs_max = std::max(abs_max, mag);
        abs_exact_err = std::max(abs_exact_err, std::abs(mag - hbar));
        magnitudes[i] = mag;
        if (dev * lambda < 0.0) ++violations;
        dev_sum += std::abs(dev);
        dev_sq += dev * dev;
        normalized[i] = std::abs(dev) / mag;
        norm_sum += normalized[i];
        norm_sq += normalized[i] * normalized[i];
    }

    auto stderr_of = [&](double sum, double sq) {
        const double mean = sum / dn;
        return n > 1 ? std::sqrt(std::max(0.0, sq / dn - mean * mean) / (dn - 1.0)) : 0.0;
    };
    const double sign_mean = sign_sum / dn;
    const double norm_mean = norm_sum / dn;
    const double norm_se = stderr_of(norm_sum, norm_sq);
    const double dev_mean = dev_sum / dn;
    const double dev_se = stderr_of(dev_sum, dev_sq);
    const double abs_mean = abs_sum / dn;

    // Memorylessness: P(x > 2m) / P(x > m) = e^-1 at the sample mean m.
    std::size_t above1 = 0, above2 = 0;
    for (double x : normalized) {
        above1 += x > norm_mean ? 1 : 0;
        above2 += x > 2.0 * norm_mean ? 1 : 0;
    }
    const double tail = above1 > 0 ? static_cast<double>(above2) / static_cast<double>(above1) : 0.0;
    const double p1 = static_cast<double>(above1) / dn;
    const double tail_se = above1 > 0 && tail > 0.0 ? tail * std::sqrt((1.0 - tail) / (tail * p1 * dn)) : 0.0;

    const std::filesystem::path summary_path = c.out / "sample_summary.csv";
    const std::filesystem::path hist_path = c.out / "sample_histogram.csv";
    const std::vector<std::string> notes = {
        units_note(c), fmt::format("source {}, hbar = {}, width = {}, draws = {}", lambda_kind_name(src.kind),
                                   num(hbar), num(src.width), n)};

    struct Row {
        std::string quantity;
        double value, se, expected, tolerance;
        bool pass;
    };
    std::vector<Row> rows;
    const double sign_tol = 3.0 / std::sqrt(dn);
    rows.push_back({"sign_mean", sign_mean, 1.0 / std::sqrt(dn), 0.0, sign_tol, std::abs(sign_mean) <= sign_tol});
    rows.push_back({"positive_fraction", static_cast<double>(positives) / dn, 0.5 / std::sqrt(dn), 0.5,
                    0.5 * sign_tol, std::abs(static_cast<double>(positives) / dn - 0.5) <= 0.5 * sign_tol});
    if (src.kind == LambdaKind::smeared) {
        const double abs_se = stderr_of(abs_sum, [&] {
            double s = 0.0;
            for (double m : magnitudes) s += m * m;
            return s;
        }());
        rows.push_back({"abs_lambda_mean", abs_mean, abs_se, hbar, std::max(3.0 * abs_se, 1e-15 * hbar),
                        std::abs(abs_mean - hbar) <= std::max(3.0 * abs_se, 1e-15 * hbar)});
        rows.push_back({"abs_lambda_min", abs_min, 0.0, hbar - src.width, 0.0, abs_min >= hbar - src.width});
        rows.push_back({"abs_lambda_max", abs_max, 0.0, hbar + src.width, 0.0, abs_max <= hbar + src.width});
    } else {
        rows.push_back({"abs_lambda_max_error", abs_exact_err, 0.0, 0.0, 0.0, abs_exact_err == 0.0});
    }
    rows.push_back({"sign_violations", static_cast<double>(violations), 0.0, 0.0, 0.0, violations == 0});
    rows.push_back({"deviation_mean", dev_mean, dev_se, 0.5 * abs_mean, 0.005 * 0.5 * abs_mean,
                    std::abs(dev_mean - 0.5 * abs_mean) <= 0.005 * 0.5 * abs_mean});
    rows.push_back({"normalized_deviation_mean", norm_mean, norm_se, 0.5, 0.0025,
                    std::abs(norm_mean - 0.5) <= 0.0025});
    const double e1 = std::exp(-1.0);
    rows.push_back({"tail_ratio", tail, tail_se, e1, 0.02 * e1, std::abs(tail - e1) <= 0.02 * e1});
    if (src.kind == LambdaKind::sphere) {
        const double z_mean = z_sum / dn;
        const double z_se = std::sqrt(1.0 / 3.0 / dn);
        const double z2_mean = z2_sum / dn;
        const double z2_se = stderr_of(z2_sum, z4_sum);
        rows.push_back({"sphere_z_mean", z_mean, z_se, 0.0, 3.0 * z_se, std::abs(z_mean) <= 3.0 * z_se});
        rows.push_back({"sphere_z2_mean", z2_mean, z2_se, 1.0 / 3.0, 3.0 * z2_se,
                        std::abs(z2_mean - 1.0 / 3.0) <= 3.0 * z2_se});
    }

    {
        CsvWriter summary(summary_path, c, {"quantity", "value", "standard_error", "expected", "tolerance", "pass"},
                          notes);
        for (const auto& r : rows) {
            summary.row({r.quantity, num(r.value), num(r.se), num(r.expected), num(r.tolerance), r.pass ? "1" : "0"});
            report.checks.push_back({r.quantity, std::abs(r.value - r.expected), "<=", r.tolerance, r.pass});
        }
    }

    {
        CsvWriter hist(hist_path, c, {"variable", "bin_center", "empirical_density", "expected_density"}, notes);
        // Normalised deviation |dS - dS_cl| / |lambda| has density 2 exp(-2x).
        const double hi = 4.0;
        const Histogram h = histogram(normalized, {}, 0.0, hi, c.bins);
        const double width = hi / static_cast<double>(c.bins);
        const double in_range = static_cast<double>(std::count_if(normalized.begin(), normalized.end(),
                                                                  [&](double x) { return x < hi; })) /
                                dn;
        for (std::size_t b = 0; b < c.bins; ++b) {
            // The histogram clamps overflow into the last bin; undo that for the density.
            double p = h.probability[b];
            if (b + 1 == c.bins) p -= 1.0 - in_range;
            const double expected = (std::exp(-2.0 * h.edges[b]) - std::exp(-2.0 * h.edges[b + 1])) / width;
            hist.row({"normalized_deviation", num(h.centers[b]), num(p / width), num(expected)});
        }
        const double pf = static_cast<double>(positives) / dn;
        hist.row({"lambda_sign", num(-1.0), num(1.0 - pf), num(0.5)});
        hist.row({"lambda_sign", num(1.0), num(pf), num(0.5)});
        if (src.kind == LambdaKind::smeared && src.width > 0.0) {
            const Histogram m = histogram(magnitudes, {}, hbar - src.width, hbar + src.width, c.bins);
            const double mw = 2.0 * src.width / static_cast<double>(c.bins);
            for (std::size_t b = 0; b < c.bins; ++b) {
                hist.row({"lambda_magnitude", num(m.centers[b]), num(m.probability[b] / mw), num(0.5 / src.width)});
            }
        }
        if (src.kind == LambdaKind::sphere) {
            const Histogram zh = histogram(zs, {}, -1.0, 1.0, c.bins);
            const double zw = 2.0 / static_cast<double>(c.bins);
            for (std::size_t b = 0; b < c.bins; ++b) {
                hist.row({"sphere_z", num(zh.centers[b]), num(zh.probability[b] / zw), num(0.5)});
            }
        }
    }
    report.files = {summary_path, hist_path};
    report.wall_seconds = seconds_since(start);
    manifest.finalize(report);
    return report;
}

RunReport cmd_equivariance(const ScenarioConfig& c) {
    const auto start = Clock::now();
    const RunManifest manifest(c);
    RunReport report{c, {}, {}, 0.0};

    const GridSpec grid = build_grid(c.grid_n, c.q_min, c.q_max);
    const ClassicalSpec spec = make_preset(c.preset, c.params);
    validate_on_grid(spec, grid);
    const QuantumOperator H = build_quantum_hamiltonian(spec, grid, c.lambda.hbar);
    const WaveState psi0 = initial_state(c, grid, H, nullptr);
    const auto steps = static_cast<std::size_t>(std::llround(c.T / c.dt));
    const WaveTrajectory waves{record_trajectory(psi0, H, c.dt, 1, steps), c.dt};

    EnsembleOptions options;
    options.source = c.lambda;
    options.mode = c.mode;
    options.bins = c.bins;
    options.snapshot_every = steps / c.snapshots;
    options.workers = c.workers;

    const std::string mode = c.mode == VelocityMode::full ? "full" : "bohmian";
    const std::vector<std::string> columns = {"t", "bin_center", "histogram_density", "wave_density", "tv_distance",
                                              "frozen_fraction"};
    struct SweepRow {
        double tau, tv, weighted_tv, frozen;
    };
    std::vector<SweepRow> sweep;

    for (double tau : c.tau_q) {
        const std::vector<std::string> notes = {
            units_note(c),
            fmt::format("preset {}, mode {}, source {}, tau_q = {}, N = {}, bins = {}", preset_name(c.preset), mode,
                        lambda_kind_name(c.lambda.kind), num(tau), c.ensemble_n, c.bins),
            "densities are bin probabilities divided by the bin width"};
        EnsembleState ens = make_ensemble(psi0, grid, c.ensemble_n, tau, c.seed, c.stratified);
        const EnsembleResult result = propagate_ensemble(std::move(ens), waves, spec, grid, c.T, options);

        const std::string tag = fmt::format("{:.0e}", tau);
        const auto plain_path = c.out / fmt::format("equivariance_tau_{}.csv", tag);
        const auto weighted_path = c.out / fmt::format("equivariance_weighted_tau_{}.csv", tag);
        CsvWriter plain(plain_path, c, columns, notes);
        std::vector<std::string> wnotes = notes;
        wnotes.push_back("histogram weighted by exp(-theta tau_Q) accumulated along each path");
        CsvWriter weighted(weighted_path, c, columns, wnotes);
        for (const auto& snap : result.snapshots) {
            const double width = snap.histogram.edges[1] - snap.histogram.edges[0];
            for (std::size_t b = 0; b < snap.histogram.centers.size(); ++b) {
                const std::string center = num(snap.histogram.centers[b]);
                const std::string wave = num(snap.wave_probability[b] / width);
                plain.row({num(snap.t), center, num(snap.histogram.probability[b] / width), wave,
                           num(snap.tv_distance), num(snap.frozen_fraction)});
                weighted.row({num(snap.t), center, num(snap.weighted.probability[b] / width), wave,
                              num(snap.weighted_tv_distance), num(snap.frozen_fraction)});
            }
        }
        report.files.push_back(plain_path);
        report.files.push_back(weighted_path);
        const EnsembleSnapshot& last = result.snapshots.back();
        sweep.push_back({tau, last.tv_distance, last.weighted_tv_distance, last.frozen_fraction});
    }

    const auto sweep_path = c.out / "equivariance_sweep.csv";
    {
        CsvWriter out(sweep_path, c, {"tau_q", "tv_distance", "weighted_tv_distance", "frozen_fraction"},
                      {units_note(c), fmt::format("mode {}, T = {}, N = {}, bins = {}", mode, num(c.T),
                                                  c.ensemble_n, c.bins)});
        for (const auto& r : sweep) out.row({num(r.tau), num(r.tv), num(r.weighted_tv), num(r.frozen)});
    }
    report.files.push_back(sweep_path);

    for (const auto& r : sweep) {
        const std::string tag = fmt::format("tau_q={}", num(r.tau));
        report.checks.push_back(check_below("frozen_fraction " + tag, r.frozen, 1e-3));
        if (c.mode == VelocityMode::bohmian) report.checks.push_back(check_below("tv_distance " + tag, r.tv, 0.02));
    }
    if (c.mode == VelocityMode::full) {
        std::vector<SweepRow> sorted = sweep;
        std::sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) { return a.tau > b.tau; });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            report.checks.push_back(check_below(
                fmt::format("tv decrease tau_q={} vs {}", num(sorted[i].tau), num(sorted[i - 1].tau)), sorted[i].tv,
                sorted[i - 1].tv));
        }
        report.checks.push_back(
            check_below(fmt::format("tv_distance tau_q={}", num(sorted.back().tau)), sorted.back().tv, 0.05));
    }
    report.wall_seconds = seconds_since(start);
    manifest.finalize(report);
    return report;
}

RunReport cmd_orderings(const ScenarioConfig& c) {
    const auto start = Clock::now();
    const RunManifest manifest(c);
    RunReport report{c, {}, {}, 0.0};

    const GridSpec grid = build_grid(c.grid_n, c.q_min, c.q_max);
    const double hbar = c.lambda.hbar;
    const ClassicalSpec configured = make_preset(c.preset, c.params);
    const ClassicalSpec control = make_preset(Preset::harmonic, c.params);
    validate_on_grid(configured, grid);

    const auto path = c.out / "orderings.csv";
    CsvWriter out(path, c,
                  {"system", "ordering", "hermiticity_defect", "relative_defect", "max_abs_imag_eigenvalue", "E0",
                   "E1", "E2", "E3", "E4"},
                  {units_note(c), fmt::format("grid n = {} on [{}, {}]; eigenvalues are real parts, ascending",
                                              c.grid_n, num(c.q_min), num(c.q_max))});

    // g varies on the grid unless it is constant to rounding.
    const RealField g = sample(grid, configured.g);
    const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
    const bool variable_g = *gmax - *gmin > 1e-14 * *gmax;

    struct Built {
        QuantumOperator op;
        double defect, relative, max_imag;
        std::vector<double> low;
    };
    // The general solver makes no symmetry assumption; the control system,
    // whose Hermiticity is checked separately, uses the symmetric one.
    auto analyse = [&](const ClassicalSpec& spec, Ordering o, bool general) {
        QuantumOperator op = build_ordering(spec, grid, hbar, o);
        const double defect = hermiticity_defect(op);
        const double scale = op.matrix.cwiseAbs().maxCoeff();
        std::vector<std::pair<double, double>> ev;
        if (general) {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(op.matrix, false);
            if (solver.info() != Eigen::Success) throw NumericalError("orderings: eigensolver failed");
            for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
                ev.emplace_back(solver.eigenvalues()[i].real(), solver.eigenvalues()[i].imag());
            }
        } else {
            for (double e : lowest_eigenvalues(op, 5)) ev.emplace_back(e, 0.0);
        }
        std::sort(ev.begin(), ev.end());
        double max_imag = 0.0;
        for (const auto& e : ev) max_imag = std::max(max_imag, std::abs(e.second));
        std::vector<double> low;
        for (std::size_t k = 0; k < std::min<std::size_t>(5, ev.size()); ++k) low.push_back(ev[k].first);
        return Built{std::move(op), defect, defect / scale, max_imag, std::move(low)};
    };
    auto emit = [&](const std::string& system, Ordering o, const Built& b) {
        std::vector<std::string> cells = {system, std::string(ordering_name(o)), num(b.defect), num(b.relative),
                                          num(b.max_imag)};
        for (double e : b.low) cells.push_back(num(e));
        while (cells.size() < 10) cells.push_back("nan");
        out.row(cells);
    };

    const std::string system = std::string(preset_name(c.preset));
    const Built sandwich = analyse(configured, Ordering::sandwich, true);
    emit(system, Ordering::sandwich, sandwich);
    report.checks.push_back(check_below("sandwich relative_defect", sandwich.relative, 1e-12));
    report.checks.push_back(check_below("sandwich max_abs_imag_eigenvalue", sandwich.max_imag, 1e-10));
    for (Ordering o : {Ordering::g_pp, Ordering::pp_g}) {
        const Built naive = analyse(configured, o, true);
        emit(system, o, naive);
        const std::string name = fmt::format("{} hermiticity_defect", ordering_name(o));
        if (variable_g) {
            report.checks.push_back(check_above(name, naive.defect, 1e-3));
        } else {
            report.checks.push_back(check_below(name, naive.defect, 1e-10));
        }
    }

    const Built ref = analyse(control, Ordering::sandwich, false);
    emit("constant_g_control", Ordering::sandwich, ref);
    report.checks.push_back(check_below("control sandwich hermiticity_defect", ref.defect, 1e-10));
    for (Ordering o : {Ordering::g_pp, Ordering::pp_g}) {
        const Built b = analyse(control, o, false);
        emit("constant_g_control", o, b);
        report.checks.push_back(
            check_below(fmt::format("control {} hermiticity_defect", ordering_name(o)), b.defect, 1e-10));
        report.checks.push_back(check_below(fmt::format("control {} entrywise difference", ordering_name(o)),
                                            (b.op.matrix - ref.op.matrix).cwiseAbs().maxCoeff(), 1e-10));
    }
    report.files = {path};
    report.wall_seconds = seconds_since(start);
    manifest.finalize(report);
    return report;
}

RunReport run_scenario(const ScenarioConfig& config) {
    switch (config.command) {
        case Command::evolve: return cmd_evolve(config);
        case Command::sample: return cmd_sample(config);
        case Command::equivariance: return cmd_equivariance(config);
        case Command::orderings: return cmd_orderings(config);
    }
    throw ConfigError("unknown command");
}

int run_command(Command command, const ConfigSources& sources, std::ostream& out, std::ostream& err) {
    ScenarioConfig config;
    try {
        config = resolve_config(command, sources);
    } catch (const std::exception& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        const RunReport report = run_scenario(config);
        for (const auto& c : report.checks) {
            out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << num(c.value) << " " << c.relation << " "
                << num(c.threshold) << "\n";
        }
        out << fmt::format("{} {} finished in {:.2f} s, output in {}\n", command_name(command), config.id,
                           report.wall_seconds, config.out.string());
        return report.exit_code();
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << "\n";
        return kExitToleranceFailure;
    }
}

}  // namespace qaction
