#pragma once

#include <functional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qaction/lattice.hpp"

namespace qaction {

enum class Preset { free, harmonic, variable_mass, gauged, custom };

std::string_view preset_name(Preset p);
// Throws ConfigError for unknown names.
Preset parse_preset(std::string_view name);

struct PresetParams {
    double mass = 1.0;
    double omega = 1.0;
    double beta = 0.3;  // variable_mass: g = 1/(m(1 + beta q^2))
    double a0 = 0.0;    // gauged: A = a0 + a1 q
    double a1 = 0.0;
};

/**
 * One-dimensional system H(q, p) = g(q)/2 (p - A(q))^2 + V(q).
 *
 * g is the inverse mass, A the vector potential, V the scalar potential.
 * Derivatives are carried alongside so the classical integrator and the
 * quantum potential never difference the coefficient functions twice.
 */
struct ClassicalSpec {
    using Fn = std::function<double(double)>;

    Preset preset = Preset::custom;
    PresetParams params{};
    Fn g, dg;
    Fn A, dA;
    Fn V, dV;

    double hamiltonian(double q, double p) const;
    double dH_dp(double q, double p) const;
    double dH_dq(double q, double p) const;
};

ClassicalSpec make_preset(Preset preset, const PresetParams& params = {});

// Coefficient derivatives from centred differences of the supplied functions.
ClassicalSpec make_custom_spec(ClassicalSpec::Fn g, ClassicalSpec::Fn A, ClassicalSpec::Fn V);

// Throws ConfigError unless g > 0 and g, A, V are finite at every grid point.
void validate_on_grid(const ClassicalSpec& spec, const GridSpec& grid);

/// Classical velocity q' = dH/dp = g(q)(p - A(q)).
double classical_velocity(double q, double p, const ClassicalSpec& spec);
/// Same, rejecting q outside the grid domain with ConfigError.
double classical_velocity(double q, double p, const ClassicalSpec& spec, const GridSpec& grid);

/// g(dS/dq - A) on the grid.
RealField velocity_field(std::span<const double> S, const ClassicalSpec& spec, const GridSpec& grid);

/// theta(S) = d/dq [ g (dS/dq - A) ], the divergence of the S-velocity field.
RealField theta_of_S(std::span<const double> S, const ClassicalSpec& spec, const GridSpec& grid);

/// p = dS/dq + (lambda/2) dOmega/dq / Omega. Throws NodeError if Omega has a node.
RealField momentum_field(std::span<const double> S, std::span<const double> Omega, double lambda,
                         const ClassicalSpec& spec, const GridSpec& grid);

enum class Ordering {
    sandwich,  // 1/2 (p - A) g (p - A)
    g_pp,      // 1/2 g (p - A)^2
    pp_g,      // 1/2 (p - A)^2 g
};

std::string_view ordering_name(Ordering o);

struct QuantumOperator {
    Eigen::MatrixXcd matrix;
    double hbar_eff;
    GridSpec grid;
};

/**
 * Dense quantum Hamiltonian 1/2 (p - A) g(q) (p - A) + V with p = -i hbar d/dq.
 *
 * The kinetic part is M^dagger diag(g_{i+1/2}) M / 2 where M maps nodal values
 * to the n+1 cell midpoints (including the two ghost cells outside the
 * domain, where the wave function is zero):
 *
 *   (M f)_{i+1/2} = -i hbar / dq (e^{-i phi_i/2} f_{i+1} - e^{+i phi_i/2} f_i),
 *   phi_i = (1/hbar) * integral of A over the cell.
 *
 * The vector potential is split as half a link phase on each side of the
 * difference. With A = 0 and constant g this is exactly -hbar^2 g/2 times the
 * three-point Dirichlet Laplacian.
 */
QuantumOperator build_quantum_hamiltonian(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff);

/// Unsymmetrised contrast builds: diag(g) K + V or K diag(g) + V, K = M^dagger M / 2.
QuantumOperator build_naive_ordering(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff,
                                     Ordering ordering);

QuantumOperator build_ordering(const ClassicalSpec& spec, const GridSpec& grid, double hbar_eff,
                               Ordering ordering);

/// max_ij |H_ij - conj(H_ji)|
double hermiticity_defect(const Eigen::MatrixXcd& m);
double hermiticity_defect(const QuantumOperator& op);

}  // namespace qaction
