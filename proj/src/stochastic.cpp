#include "qaction/stochastic.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qaction/errors.hpp"
#include "qaction/madelung.hpp"

namespace qaction {

std::string_view lambda_kind_name(LambdaKind k) {
    switch (k) {
        case LambdaKind::binary: return "binary";
        case LambdaKind::sphere: return "sphere";
        case LambdaKind::smeared: return "smeared";
    }
    return "binary";
}

LambdaKind parse_lambda_kind(std::string_view name) {
    for (LambdaKind k : {LambdaKind::binary, LambdaKind::sphere, LambdaKind::smeared}) {
        if (lambda_kind_name(k) == name) return k;
    }
    throw ConfigError(fmt::format("unknown lambda source '{}'", name));
}

void validate(const LambdaSource& source) {
    if (!(source.hbar > 0.0) || !std::isfinite(source.hbar)) {
        throw ConfigError(fmt::format("lambda source needs hbar > 0, got {}", source.hbar));
    }
    if (!(source.width >= 0.0) || !(source.width < source.hbar)) {
        throw ConfigError(fmt::format("smearing width must lie in [0, hbar), got {}", source.width));
    }
}

SpherePoint sample_sphere_point(double radius, CounterRng& rng) {
    // z uniform on [-1, 1] gives a uniform point on the sphere (Archimedes).
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {radius * rho * std::cos(phi), radius * rho * std::sin(phi), radius * z};
}

double sample_lambda(const LambdaSource& source, CounterRng& rng) {
    switch (source.kind) {
        case LambdaKind::binary:
            return rng.uniform() < 0.5 ? -source.hbar : source.hbar;
        case LambdaKind::sphere: {
            const SpherePoint xi = sample_sphere_point(source.hbar, rng);
            return xi.z >= 0.0 ? source.hbar : -source.hbar;
        }
        case LambdaKind::smeared: {
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double u = rng.uniform();
            return sign * (source.hbar + source.width * (2.0 * u - 1.0));
        }
    }
    return source.hbar;
}

double sample_action_deviation(double lambda, CounterRng& rng) {
    if (lambda == 0.0 || !std::isfinite(lambda)) throw ConfigError("lambda must be non-zero and finite");
    const double mean = 0.5 * std::abs(lambda);
    const double e = -mean * std::log1p(-rng.uniform());
    return lambda > 0.0 ? e : -e;
}

double classical_action_increment(double q, double p, const ClassicalSpec& spec, double dt) {
    if (!(dt > 0.0)) throw ConfigError(fmt::format("dt must be positive, got {}", dt));
    return (p * spec.dH_dp(q, p) - spec.hamiltonian(q, p)) * dt;
}

double segment_weight(std::span<const double> S, const ClassicalSpec& spec, const GridSpec& grid, double dt,
                      double q) {
    const RealField theta = theta_of_S(S, spec, grid);
    return std::exp(-interpolate(theta, grid, q) * dt);
}

ActionSegment sample_segment(double q, double p, double lambda, std::span<const double> S,
                             const ClassicalSpec& spec, const GridSpec& grid, double dt, CounterRng& rng) {
    ActionSegment seg;
    seg.lambda = lambda;
    seg.dS_classical = classical_action_increment(q, p, spec, dt);
    seg.dS = seg.dS_classical + sample_action_deviation(lambda, rng);
    seg.weight = segment_weight(S, spec, grid, dt, q);
    return seg;
}

double microscopic_velocity(double q, std::span<const double> S, std::span<const double> Omega, double lambda,
                            const ClassicalSpec& spec, const GridSpec& grid) {
    check_shape(S, grid);
    check_shape(Omega, grid);
    require_node_free(Omega, "microscopic_velocity");
    const RealField dS = gradient(S, grid);
    RealField dlog = gradient(Omega, grid);
    for (std::size_t i = 0; i < dlog.size(); ++i) dlog[i] /= Omega[i];

    const double g = spec.g(q);
    const double drift = g * (interpolate(dS, grid, q) - spec.A(q));
    return drift + 0.5 * lambda * g * interpolate(dlog, grid, q);
}

double effective_velocity(double v_plus, double v_minus) { return 0.5 * (v_plus + v_minus); }

RealField bohmian_velocity(const WaveState& state, const ClassicalSpec& spec, const GridSpec& grid) {
    const MadelungState polar = to_polar(state, grid);
    return velocity_field(polar.S, spec, grid);
}

}  // namespace qaction
