#include "qaction/hamiltonian.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qaction/errors.hpp"

namespace qaction {

std::string_view preset_name(Preset p) {
    switch (p) {
        case Preset::free: return "free";
        case Preset::harmonic: return "harmonic";
        case Preset::variable_mass: return "variable_mass";
        case Preset::gauged: return "gauged";
        case Preset::custom: return "custom";
    }
    return "custom";
}

Preset parse_preset(std::string_view name) {
    for (Preset p : {Preset::free, Preset::harmonic, Preset::variable_mass, Preset::gauged}) {
        if (preset_name(p) == name) return p;
    }
    throw ConfigError(fmt::format("unknown preset '{}'", name));
}

double ClassicalSpec::hamiltonian(double q, double p) const {
    const double k = p - A(q);
    return 0.5 * g(q) * k * k + V(q);
}

double ClassicalSpec::dH_dp(double q, double p) const { return g(q) * (p - A(q)); }

double ClassicalSpec::dH_dq(double q, double p) const {
    const double k = p - A(q);
    return 0.5 * dg(q) * k * k - g(q) * k * dA(q) + dV(q);
}

ClassicalSpec make_preset(Preset preset, const PresetParams& prm) {
    if (!(prm.mass > 0.0)) throw ConfigError("mass must be positive");
    const double m = prm.mass;
    const double k = m * prm.omega * prm.omega;
    auto zero = [](double) { return 0.0; };

    ClassicalSpec s;
    s.preset = preset;
    s.params = prm;
    s.g = [m](double) { return 1.0 / m; };
    s.dg = zero;
    s.A = zero;
    s.dA = zero;
    s.V = [k](double q) { return 0.5 * k * q * q; };
    s.dV = [k](double q) { return k * q; };

    switch (preset) {
        case Preset::free:
            s.V = zero;
            s.dV = zero;
            break;
        case Preset::harmonic:
            break;
        case Preset::variable_mass: {
            const double b = prm.beta;
            s.g = [m, b](double q) { return 1.0 / (m * (1.0 + b * q * q)); };
            s.dg = [m, b](double q) {
                const double d = 1.0 + b * q * q;
                return -2.0 * b * q / (m * d * d);
            };
            break;
        }
        case Preset::gauged: {
            const double a0 = prm.a0, a1 = prm.a1;
            s.A = [a0, a1](double q) { return a0 + a1 * q; };
            s.dA = [a1](double) { return a1; };
            break;
        }
        case Preset::custom:
            throw ConfigError("custom systems are built with make_custom_spec");
    }
    return s;
}

ClassicalSpec make_custom_spec(ClassicalSpec::Fn g, ClassicalSpec::Fn A, ClassicalSpec::Fn V) {
    auto diff = [](ClassicalSpec::Fn f) {
        return [f](double q) {
            const double h = 1e-5 * std::max(1.0, std::abs(q));
            return (f(q + h) - f(q - h)) / (2.0 * h);
        };
    };
    ClassicalSpec s;
    s.preset = Preset::custom;
    s.dg = diff(g);
    s.dA = diff(A);
    s.dV = diff(V);
    s.g = std::move(g);
    s.A = std::move(A);
    s.V = std::move(V);
    return s;
}

void validate_on_grid(const ClassicalSpec& spec, const GridSpec& grid) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
        const double q = grid.point(i);
        const double g = spec.g(q);
        if (!std::isfinite(g) || g <= 0.0) {
            throw ConfigError(fmt::format("inverse mass g must be positive, got {} at q = {}", g, q));
        }
        if (!std::isfinite(spec.A(q)) || !std::isfinite(spec.V(q))) {
            throw ConfigError(fmt::format("non-finite potential at q = {}", q));
        }
    }
}

double classical_velocity(double q, double p, const ClassicalSpec& spec) { return spec.dH_dp(q, p); }

double classical_velocity(double q, double p, const ClassicalSpec& spec, const GridSpec& grid) {
    if (!grid.contains(q)) {
        throw ConfigError(fmt::format("q = {} outside [{}, {}]", q, grid.q_min(), grid.q_max()));
    }
    return classical_velocity(q, p, spec);
}

RealField velocity_field(std::span<const double> S, const ClassicalSpec& spec, const GridSpec& grid) {
    RealField v = gradient(S, grid);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double q = grid.point(i);
        v[i] = spec.g(q) * (v[i] - spec.A(q));
    }
    return v;
}

RealField theta_of_S(std::span<const double> S, const ClassicalSpec& spec, const GridSpec& grid) {
    return gradient(velocity_field(S, spec, grid), grid);
}

RealField momentum_field(std::span<const double> S, std::span<const double> Omega, double lambda,
                         const ClassicalSpec&, const GridSpec& grid) {
    check_shape(S, grid);
    check_shape(Omega, grid);
    require_node_free(Omega, "momentum_field");
    RealField p = gradient(S, grid);
    const RealField dOmega = gradient(Omega, grid);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += 0.5 * lambda * dOmega[i] / Omega[i];
    return p;
}

std::string_view ordering_name(Ordering o) {
    switch (o) {
        case Ordering::sandwich: return "sandwich";
        case Ordering::g_pp: return "g_pp";
        case Ordering::pp_g: return "pp_g";
    }
    return "sandwich";
}

namespace {

void check_build_inputs(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff) {
    if (!(hbar_eff > 0.0) || !std::isfinite(hbar_eff)) {
        throw ConfigError(fmt::format("hbar_eff must be positive, got {}", hbar_eff));
    }
    validate_on_grid(spec, grid);
}

// Link phase over cell [q_i, q_i + dq] by Simpson's rule (exact for A linear or quadratic).
double link_phase(const ClassicalSpec& spec, double left, double dq, double hbar) {
    const double flux = (spec.A(left) + 4.0 * spec.A(left + 0.5 * dq) + spec.A(left + dq)) * dq / 6.0;
    return flux / hbar;
}

// Tridiagonal M^dagger diag(w) M / 2 with per-midpoint weights w(q_mid).
template <typename Weight>
Eigen::MatrixXcd kinetic(const ClassicalSpec& spec, const GridSpec& grid, double hbar, Weight&& weight) {
    const auto n = static_cast<Eigen::Index>(grid.n());
    const double h = grid.dq();
    const double scale = 0.5 * hbar * hbar / (h * h);
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(n, n);
    // Midpoint k + 1/2 couples nodes k and k + 1; k = -1 and k = n - 1 are ghost cells.
    for (Eigen::Index k = -1; k < n; ++k) {
        const double left = grid.q_min() + static_cast<double>(k) * h;
        const double w = scale * weight(left + 0.5 * h);
        if (k >= 0) K(k, k) += w;
        if (k + 1 < n) K(k + 1, k + 1) += w;
        if (k >= 0 && k + 1 < n) {
            const Complex hop = -w * std::polar(1.0, -link_phase(spec, left, h, hbar));
            K(k, k + 1) = hop;
            K(k + 1, k) = std::conj(hop);
        }
    }
    return K;
}

void add_potential(Eigen::MatrixXcd& H, const ClassicalSpec& spec, const GridSpec& grid) {
    for (Eigen::Index i = 0; i < H.rows(); ++i) H(i, i) += spec.V(grid.point(static_cast<std::size_t>(i)));
}

}  // namespace

QuantumOperator build_quantum_hamiltonian(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff) {
    check_build_inputs(spec, grid, hbar_eff);
    Eigen::MatrixXcd H = kinetic(spec, grid, hbar_eff, [&](double q) { return spec.g(q); });
    add_potential(H, spec, grid);
    return {std::move(H), hbar_eff, grid};
}

QuantumOperator build_naive_ordering(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff,
                                     Ordering ordering) {
    check_build_inputs(spec, grid, hbar_eff);
    if (ordering == Ordering::sandwich) return build_quantum_hamiltonian(spec, grid, hbar_eff);

    const Eigen::MatrixXcd K = kinetic(spec, grid, hbar_eff, [](double) { return 1.0; });
    Eigen::VectorXd gn(K.rows());
    for (Eigen::Index i = 0; i < gn.size(); ++i) gn(i) = spec.g(grid.point(static_cast<std::size_t>(i)));

    Eigen::MatrixXcd H = ordering == Ordering::g_pp ? Eigen::MatrixXcd(gn.asDiagonal() * K)
                                                    : Eigen::MatrixXcd(K * gn.asDiagonal());
    add_potential(H, spec, grid);
    return {std::move(H), hbar_eff, grid};
}

QuantumOperator build_ordering(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff,
                               Ordering ordering) {
    return ordering == Ordering::sandwich ? build_quantum_hamiltonian(spec, grid, hbar_eff)
                                          : build_naive_ordering(spec, grid, hbar_eff, ordering);
}

double hermiticity_defect(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw ShapeError("hermiticity_defect needs a square matrix");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i; j < m.cols(); ++j) {
            worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
        }
    }
    return worst;
}

double hermiticity_defect(const QuantumOperator& op) { return hermiticity_defect(op.matrix); }

}  // namespace qaction
