#pragma once

#include <span>
#include <string_view>

#include "qaction/evolution.hpp"
#include "qaction/hamiltonian.hpp"
#include "qaction/lattice.hpp"
#include "qaction/rng.hpp"

namespace qaction {

enum class LambdaKind { binary, sphere, smeared };

std::string_view lambda_kind_name(LambdaKind k);
LambdaKind parse_lambda_kind(std::string_view name);

/**
 * Symmetric source of the signed action scale lambda.
 *
 *  binary  : +hbar or -hbar with probability 1/2 each.
 *  sphere  : a uniform point xi on the sphere of radius hbar; the upper
 *            hemisphere (xi_3 >= 0) maps to +hbar, the lower to -hbar.
 *  smeared : sign * (hbar + width * (2u - 1)), u uniform; needs width < hbar.
 *
 * All kinds take the sign from the first uniform of the stream, so a smeared
 * source of width 0 reproduces the binary source draw for draw.
 */
struct LambdaSource {
    LambdaKind kind = LambdaKind::binary;
    double hbar = 1.0;
    double width = 0.0;
    std::uint64_t seed = 0;
};

// Throws ConfigError for hbar <= 0, width < 0 or width >= hbar.
void validate(const LambdaSource& source);

struct SpherePoint {
    double x, y, z;
};

SpherePoint sample_sphere_point(double radius, CounterRng& rng);

double sample_lambda(const LambdaSource& source, CounterRng& rng);

/// sign(lambda) * E with E exponential of mean |lambda|/2, i.e. density
/// proportional to exp(-(2/lambda) x) on the half-line selected by the sign.
double sample_action_deviation(double lambda, CounterRng& rng);

/// p q' dt - H(q, p) dt with q' = g (p - A).
double classical_action_increment(double q, double p, const ClassicalSpec& spec, double dt);

/// exp(-theta(S)(q) dt), theta interpolated linearly to q.
double segment_weight(std::span<const double> S, const ClassicalSpec& spec, const GridSpec& grid, double dt,
                      double q);

struct ActionSegment {
    double dS;
    double dS_classical;
    double lambda;
    double weight;
};

/// One action segment starting at (q, p): the classical increment, an
/// exponential deviation of the sign of lambda, and the theta weight of S.
ActionSegment sample_segment(double q, double p, double lambda, std::span<const double> S,
                             const ClassicalSpec& spec, const GridSpec& grid, double dt, CounterRng& rng);

/// q'(lambda) = g (dS/dq - A) + (lambda/2) g dOmega/dq / Omega at q, with
/// dS/dq and dOmega/dq / Omega interpolated linearly from the grid.
/// Throws NodeError if Omega has a node or is below threshold around q.
double microscopic_velocity(double q, std::span<const double> S, std::span<const double> Omega, double lambda,
                            const ClassicalSpec& spec, const GridSpec& grid);

/// (v_plus + v_minus) / 2
double effective_velocity(double v_plus, double v_minus);

/// g (dS/dq - A) from the unwrapped phase of psi. Throws NodeError on nodes.
RealField bohmian_velocity(const WaveState& state, const ClassicalSpec& spec, const GridSpec& grid);

}  // namespace qaction
