#include "qaction/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "qaction/errors.hpp"
#include "qaction/madelung.hpp"

namespace qaction {

double EnsembleState::frozen_fraction() const {
    if (frozen.empty()) return 0.0;
    const auto count = std::count(frozen.begin(), frozen.end(), std::uint8_t{1});
    return static_cast<double>(count) / static_cast<double>(frozen.size());
}

RealField sample_positions(std::span<const double> density, const GridSpec& grid, std::size_t n,
                           std::uint64_t seed, bool stratified) {
    check_shape(density, grid);
    const std::size_t cells = grid.n() - 1;
    const double h = grid.dq();
    RealField cdf(grid.n(), 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
        const double f0 = std::max(density[c], 0.0);
        const double f1 = std::max(density[c + 1], 0.0);
        cdf[c + 1] = cdf[c] + 0.5 * (f0 + f1) * h;
    }
    const double total = cdf.back();
    if (!(total > 0.0)) throw ConfigError("cannot sample positions from a zero density");

    RealField out(n);
    for (std::size_t k = 0; k < n; ++k) {
        CounterRng rng(seed, StreamTag::initial_position, static_cast<std::uint32_t>(k));
        const double u = rng.uniform();
        const double target = total * (stratified ? (static_cast<double>(k) + u) / static_cast<double>(n) : u);
        auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        std::size_t c = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
        c = std::min(c, cells - 1);
        // Mass inside the cell is f0 x + (f1 - f0) x^2 / 2h; invert for x.
        const double f0 = std::max(density[c], 0.0);
        const double f1 = std::max(density[c + 1], 0.0);
        const double m = target - cdf[c];
        const double a = (f1 - f0) / (2.0 * h);
        const double disc = std::max(f0 * f0 + 4.0 * a * m, 0.0);
        const double denom = f0 + std::sqrt(disc);
        double x = denom > 0.0 ? 2.0 * m / denom : 0.0;
        x = std::clamp(x, 0.0, h);
        out[k] = grid.point(c) + x;
    }
    return out;
}

EnsembleState make_ensemble(const WaveState& initial, const GridSpec& grid, std::size_t n, double tau_Q,
                            std::uint64_t seed, bool stratified) {
    if (n == 0) throw ConfigError("ensemble size must be positive");
    if (!(tau_Q > 0.0)) throw ConfigError(fmt::format("tau_Q must be positive, got {}", tau_Q));
    EnsembleState ens;
    ens.positions = sample_positions(abs2(initial.psi), grid, n, seed, stratified);
    ens.lambdas.assign(n, 0.0);
    ens.log_weights.assign(n, 0.0);
    ens.frozen.assign(n, 0);
    ens.tau_Q = tau_Q;
    ens.t = initial.t;
    ens.seed = seed;
    return ens;
}

Histogram histogram(std::span<const double> positions, std::span<const double> weights, double lo, double hi,
                    std::size_t bins) {
    if (bins == 0 || !(hi > lo)) throw ConfigError("histogram needs bins > 0 and hi > lo");
    if (!weights.empty() && weights.size() != positions.size()) throw ShapeError("histogram: weight count mismatch");
    Histogram hist;
    hist.edges.resize(bins + 1);
    hist.centers.resize(bins);
    hist.probability.assign(bins, 0.0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) hist.edges[b] = lo + static_cast<double>(b) * width;
    for (std::size_t b = 0; b < bins; ++b) hist.centers[b] = lo + (static_cast<double>(b) + 0.5) * width;

    double total = 0.0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const double w = weights.empty() ? 1.0 : weights[k];
        const auto b = static_cast<std::ptrdiff_t>(std::floor((positions[k] - lo) / width));
        const auto clamped = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
        hist.probability[clamped] += w;
        total += w;
    }
    if (total > 0.0) {
        for (auto& p : hist.probability) p /= total;
    }
    return hist;
}

RealField bin_probabilities(std::span<const double> density, const GridSpec& grid, std::span<const double> edges) {
    const double total = integrate(density, grid);
    RealField p(edges.size() - 1);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        p[b] = integrate_between(density, grid, edges[b], edges[b + 1]) / total;
    }
    return p;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ShapeError("total_variation: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

EnsembleSnapshot ensemble_snapshot(const EnsembleState& ens, const WaveState& wave, const GridSpec& grid,
                                   std::size_t bins) {
    EnsembleSnapshot snap;
    snap.t = ens.t;
    snap.histogram = histogram(ens.positions, {}, grid.q_min(), grid.q_max(), bins);

    RealField w(ens.size());
    const double shift = ens.log_weights.empty() ? 0.0 : *std::max_element(ens.log_weights.begin(), ens.log_weights.end());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(ens.log_weights[k] - shift);
    snap.weighted = histogram(ens.positions, w, grid.q_min(), grid.q_max(), bins);

    snap.wave_probability = bin_probabilities(abs2(wave.psi), grid, snap.histogram.edges);
    snap.tv_distance = total_variation(snap.histogram.probability, snap.wave_probability);
    snap.weighted_tv_distance = total_variation(snap.weighted.probability, snap.wave_probability);
    snap.frozen_fraction = ens.frozen_fraction();
    return snap;
}

namespace {

// Guidance fields at one grid point of one wave frame, packed so an
// interpolation touches a single cache line per node.
struct FieldPoint {
    double drift;   // g (dS/dq - A)
    double spread;  // g dOmega/dq / Omega
    double theta;   // d drift / dq
    double valid;   // 1 where the point and its stencil neighbours are node-free
};

using FieldFrame = std::vector<FieldPoint>;

FieldFrame make_frame(const WaveState& wave, const ClassicalSpec& spec, const GridSpec& grid) {
    const std::size_t n = grid.n();
    const RealField omega = abs2(wave.psi);
    const double peak = *std::max_element(omega.begin(), omega.end());
    const double cutoff = kNodeThreshold * peak;

    RealField drift = phase_gradient(wave.psi, grid, wave.hbar_eff);
    const RealField domega = gradient(omega, grid);
    FieldFrame f(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = grid.point(i);
        const double g = spec.g(q);
        drift[i] = g * (drift[i] - spec.A(q));
        f[i].drift = drift[i];
        f[i].spread = omega[i] >= cutoff ? g * domega[i] / omega[i] : 0.0;
    }
    const RealField theta = gradient(drift, grid);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(n - 1, i + 2);
        bool ok = true;
        for (std::size_t j = lo; j <= hi; ++j) ok = ok && omega[j] >= cutoff;
        f[i].theta = theta[i];
        f[i].valid = ok ? 1.0 : 0.0;
    }
    return f;
}

struct PointFields {
    double drift, spread, theta;
};

// Times are counted in units of min(tau_Q, interval); the larger of the two
// must be an integer multiple of that unit.
struct Schedule {
    std::size_t steps;
    std::size_t step_units;
    std::size_t frame_units;
    std::size_t first_step;  // global micro-step index of ens.t

    std::size_t units(std::size_t gstep) const { return gstep * step_units; }
    std::size_t frame(std::size_t gstep) const { return units(gstep) / frame_units; }
    double frame_weight(std::size_t gstep) const {
        return static_cast<double>(units(gstep) % frame_units) / static_cast<double>(frame_units);
    }
    bool on_frame(std::size_t gstep) const { return units(gstep) % frame_units == 0; }
};

std::size_t integer_ratio(double big, double small) {
    const double r = big / small;
    const double k = std::round(r);
    if (k < 1.0 || std::abs(r - k) > 1e-9 * r) return 0;
    return static_cast<std::size_t>(k);
}

Schedule make_schedule(const EnsembleState& ens, const WaveTrajectory& waves, double T) {
    if (waves.frames.size() < 2) throw ConfigError("wave trajectory needs at least two frames");
    const double tau = ens.tau_Q;
    Schedule sched{};
    if (tau <= waves.interval) {
        sched.step_units = 1;
        sched.frame_units = integer_ratio(waves.interval, tau);
    } else {
        sched.step_units = integer_ratio(tau, waves.interval);
        sched.frame_units = 1;
    }
    if (sched.step_units == 0 || sched.frame_units == 0) {
        throw ConfigError(fmt::format("tau_Q = {} and the wave interval {} must divide one another", tau,
                                      waves.interval));
    }
    const double steps = std::round(T / tau);
    if (T < 0.0 || std::abs(steps * tau - T) > 1e-9 * std::max(T, tau)) {
        throw ConfigError(fmt::format("T = {} is not a multiple of tau_Q = {}", T, tau));
    }
    const double first = std::round((ens.t - waves.t0()) / tau);
    if (first < 0.0 || ens.t + T > waves.t_end() + 1e-9 * waves.interval) {
        throw ConfigError("ensemble time window runs outside the wave trajectory");
    }
    sched.steps = static_cast<std::size_t>(steps);
    sched.first_step = static_cast<std::size_t>(first);
    return sched;
}

}  // namespace

EnsembleResult propagate_ensemble(EnsembleState ens, const WaveTrajectory& waves, const ClassicalSpec& spec,
                                  const GridSpec& grid, double T, const EnsembleOptions& options) {
    if (options.mode == VelocityMode::full) validate(options.source);
    if (ens.frozen.size() != ens.size()) ens.frozen.assign(ens.size(), 0);
    if (ens.lambdas.size() != ens.size()) ens.lambdas.assign(ens.size(), 0.0);
    if (ens.log_weights.size() != ens.size()) ens.log_weights.assign(ens.size(), 0.0);
    const Schedule sched = make_schedule(ens, waves, T);

    std::vector<FieldFrame> frames;
    frames.reserve(waves.frames.size());
    for (const auto& w : waves.frames) {
        check_shape(w.psi, grid);
        frames.push_back(make_frame(w, spec, grid));
    }
    const std::size_t last_frame = frames.size() - 1;

    // Snapshot micro-step counts (relative to the start of this call).
    std::vector<std::size_t> snap_steps;
    if (options.snapshot_every > 0) {
        const std::size_t every = options.snapshot_every * sched.frame_units;
        for (std::size_t s = 0; s < sched.steps; ++s) {
            if (sched.units(sched.first_step + s) % every == 0) snap_steps.push_back(s);
        }
    }
    snap_steps.push_back(sched.steps);
    std::vector<RealField> snap_positions(snap_steps.size(), RealField(ens.size()));
    std::vector<RealField> snap_logw(snap_steps.size(), RealField(ens.size()));
    std::vector<std::vector<std::uint8_t>> snap_frozen(snap_steps.size(), std::vector<std::uint8_t>(ens.size()));

    const double tau = ens.tau_Q;
    const double inv_h = 1.0 / grid.dq();
    const std::size_t n = grid.n();

    auto fields_at = [&](std::size_t frame, std::size_t c, double w) -> std::optional<PointFields> {
        const FieldPoint& l = frames[frame][c];
        const FieldPoint& r = frames[frame][c + 1];
        if (l.valid == 0.0 || r.valid == 0.0) return std::nullopt;
        return PointFields{(1.0 - w) * l.drift + w * r.drift, (1.0 - w) * l.spread + w * r.spread,
                           (1.0 - w) * l.theta + w * r.theta};
    };

    // One micro step of particle p at global step gstep; returns false when it freezes.
    auto advance = [&](std::size_t p, std::size_t gstep, double& q, double& logw, double& lambda) {
        std::size_t k = sched.frame(gstep);
        double wt = sched.frame_weight(gstep);
        if (k >= last_frame) {
            k = last_frame - 1;
            wt = 1.0;
        }
        const double x = (q - grid.q_min()) * inv_h;
        if (!(x >= 0.0) || x >= static_cast<double>(n - 1)) return false;
        const auto c = static_cast<std::size_t>(x);
        const double wq = x - static_cast<double>(c);
        const auto a = fields_at(k, c, wq);
        const auto b = fields_at(k + 1, c, wq);
        if (!a || !b) return false;
        const double drift = (1.0 - wt) * a->drift + wt * b->drift;
        const double spread = (1.0 - wt) * a->spread + wt * b->spread;
        const double theta = (1.0 - wt) * a->theta + wt * b->theta;

        if (options.mode == VelocityMode::full) {
            CounterRng rng(ens.seed, StreamTag::lambda, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(gstep));
            lambda = sample_lambda(options.source, rng);
        } else {
            lambda = 0.0;
        }
        const double moved = q + (drift + 0.5 * lambda * spread) * tau;
        logw -= theta * tau;
        if (!(moved >= grid.q_min() && moved <= grid.q_max())) return false;
        q = moved;
        return true;
    };

    // Particles advance in blocks, step-major within a block, so the frames
    // in use stay cached across the block. Each particle's path depends only
    // on its own stream, hence not on block or worker layout.
    constexpr std::size_t kBlock = 512;
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t b0 = begin; b0 < end; b0 += kBlock) {
            const std::size_t b1 = std::min(end, b0 + kBlock);
            std::size_t next_snap = 0;
            for (std::size_t s = 0; s <= sched.steps; ++s) {
                while (next_snap < snap_steps.size() && snap_steps[next_snap] == s) {
                    for (std::size_t p = b0; p < b1; ++p) {
                        snap_positions[next_snap][p] = ens.positions[p];
                        snap_logw[next_snap][p] = ens.log_weights[p];
                        snap_frozen[next_snap][p] = ens.frozen[p];
                    }
                    ++next_snap;
                }
                if (s == sched.steps) break;
                const std::size_t gstep = sched.first_step + s;
                for (std::size_t p = b0; p < b1; ++p) {
                    if (ens.frozen[p]) continue;
                    if (!advance(p, gstep, ens.positions[p], ens.log_weights[p], ens.lambdas[p])) ens.frozen[p] = 1;
                }
            }
        }
    };

    const unsigned workers = std::max(1u, options.workers);
    const std::size_t total = ens.size();
    if (workers == 1 || total < 2 * workers) {
        run_range(0, total);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (total + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(total, w * chunk);
            const std::size_t end = std::min(total, begin + chunk);
            pool.emplace_back([&, begin, end] { run_range(begin, end); });
        }
        for (auto& t : pool) t.join();
    }
    ens.t += static_cast<double>(sched.steps) * tau;

    EnsembleResult result;
    for (std::size_t i = 0; i < snap_steps.size(); ++i) {
        const std::size_t gstep = sched.first_step + snap_steps[i];
        if (!sched.on_frame(gstep)) continue;
        const std::size_t frame = std::min(sched.frame(gstep), last_frame);
        EnsembleState view;
        view.positions = std::move(snap_positions[i]);
        view.log_weights = std::move(snap_logw[i]);
        view.frozen = std::move(snap_frozen[i]);
        EnsembleSnapshot snap = ensemble_snapshot(view, waves.frames[frame], grid, options.bins);
        snap.t = waves.frames[frame].t;
        result.snapshots.push_back(std::move(snap));
    }
    result.state = std::move(ens);
    return result;
}

}  // namespace qaction
