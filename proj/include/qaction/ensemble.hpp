#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qaction/evolution.hpp"
#include "qaction/hamiltonian.hpp"
#include "qaction/stochastic.hpp"

namespace qaction {

struct EnsembleState {
    RealField positions;
    RealField lambdas;           // lambda used in the most recent micro step
    RealField log_weights;       // accumulated -theta(S) tau_Q
    std::vector<std::uint8_t> frozen;
    double tau_Q = 1e-3;
    double t = 0.0;
    std::uint64_t seed = 0;

    std::size_t size() const { return positions.size(); }
    double frozen_fraction() const;
};

/// Draws n positions from the piecewise-linear density on the grid by
/// inverse-CDF sampling. With stratified = true particle k uses the uniform
/// (k + u_k)/n, otherwise u_k directly; u_k comes from the particle's own
/// counter stream.
RealField sample_positions(std::span<const double> density, const GridSpec& grid, std::size_t n,
                           std::uint64_t seed, bool stratified = true);

EnsembleState make_ensemble(const WaveState& initial, const GridSpec& grid, std::size_t n, double tau_Q,
                            std::uint64_t seed, bool stratified = true);

/// Wave functions at t0 + k * interval, k = 0..frames-1.
struct WaveTrajectory {
    std::vector<WaveState> frames;
    double interval;

    double t0() const { return frames.front().t; }
    double t_end() const { return t0() + interval * static_cast<double>(frames.size() - 1); }
};

struct Histogram {
    RealField edges;   // bins + 1 entries
    RealField centers;
    RealField probability;  // per bin, sums to 1
};

/// Histogram of positions on [lo, hi]; optional non-negative weights.
Histogram histogram(std::span<const double> positions, std::span<const double> weights, double lo, double hi,
                    std::size_t bins);

/// Probability of each bin under the normalised density |psi|^2.
RealField bin_probabilities(std::span<const double> density, const GridSpec& grid, std::span<const double> edges);

/// 1/2 sum |p_i - q_i|
double total_variation(std::span<const double> p, std::span<const double> q);

struct EnsembleSnapshot {
    double t;
    Histogram histogram;
    Histogram weighted;
    RealField wave_probability;
    double tv_distance;
    double weighted_tv_distance;
    double frozen_fraction;
};

enum class VelocityMode {
    full,      // q' = g (dS/dq - A) + (lambda/2) g dOmega/dq / Omega, lambda resampled each step
    bohmian,   // lambda forced to 0: pure transport along g (dS/dq - A)
};

struct EnsembleOptions {
    LambdaSource source{};
    VelocityMode mode = VelocityMode::full;
    std::size_t bins = 100;
    std::size_t snapshot_every = 0;  // wave frames between snapshots; 0 = final time only
    unsigned workers = 1;
};

struct EnsembleResult {
    EnsembleState state;
    std::vector<EnsembleSnapshot> snapshots;
};

/**
 * Moves every particle by q'(lambda) tau_Q per micro step for a duration T.
 *
 * lambda is drawn from options.source at every micro step from the stream
 * (seed, particle, step) and held fixed within the step. Fields are built
 * from the wave trajectory and interpolated linearly in q and in t. A
 * particle that reaches a region where |psi|^2 is below the node threshold,
 * or leaves the grid, is frozen where it stands. Snapshots compare the
 * position histogram against |psi(t)|^2.
 *
 * tau_Q and the trajectory interval must divide one another; T must not run
 * past the last frame.
 * Results are identical for any worker count.
 */
EnsembleResult propagate_ensemble(EnsembleState ens, const WaveTrajectory& waves, const ClassicalSpec& spec,
                                  const GridSpec& grid, double T, const EnsembleOptions& options);

/// Snapshot of the current ensemble against one wave frame.
EnsembleSnapshot ensemble_snapshot(const EnsembleState& ens, const WaveState& wave, const GridSpec& grid,
                                   std::size_t bins);

}  // namespace qaction
