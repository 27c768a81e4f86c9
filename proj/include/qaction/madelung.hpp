#pragma once

#include <span>

#include "qaction/evolution.hpp"
#include "qaction/hamiltonian.hpp"
#include "qaction/lattice.hpp"

namespace qaction {

/// Polar fields for one signed lambda: Omega = R^2, Psi = R exp(iS/|lambda|).
struct MadelungState {
    RealField R;
    RealField S;
    double lambda = 1.0;
    double t = 0.0;

    RealField density() const;
};

/// The +hbar / -hbar branches with S_plus - S_minus = S0.
struct PhasePair {
    MadelungState plus;
    MadelungState minus;
    double S0 = 0.0;
};

/// Phase unwrapped left to right, S = |lambda| * phase, shifted by a multiple
/// of 2 pi |lambda| so that S at grid.mid_index() lies on the principal
/// branch. The returned state carries lambda = sign * hbar_eff.
/// Throws NodeError when |psi|^2 has a node.
MadelungState to_polar(const WaveState& state, const GridSpec& grid, int sign = +1);

WaveState from_polar(const MadelungState& m);

/// Builds the pair from one wave function: S_minus = S_plus - S0, equal amplitudes.
PhasePair make_pair(const WaveState& state, const GridSpec& grid, double S0);

/// Gradient of the unwrapped phase times hbar, computed from local phase
/// increments arg(psi_{i+1} conj(psi_i)) so it never divides by |psi|.
RealField phase_gradient(std::span<const Complex> psi, const GridSpec& grid, double hbar);

/// The lambda^2 term of the Hamilton-Jacobi-Madelung equation,
///   Q = -(lambda^2/2) (g R''/R + g' R'/R).
RealField quantum_potential(std::span<const double> R, const ClassicalSpec& spec, const GridSpec& grid,
                            double lambda);

/// -d/dq [ g (dS/dq - A) Omega ]
RealField continuity_rate(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid);

/// Single-branch Omega rate including the lambda diffusion term:
///   -d/dq [ g (dS/dq - A) Omega ] - (lambda/2) d/dq [ g dOmega/dq ]
RealField branch_density_rate(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid);

/// -( g/2 (dS/dq - A)^2 + V + Q )
RealField action_rate(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid);

/// Largest dt allowed by 0.1 dq^2 / (|lambda| max g).
double madelung_stability_bound(const ClassicalSpec& spec, const GridSpec& grid, double lambda);

/**
 * One RK4 step of the coupled (Omega, S) equations for both signs of lambda.
 *
 * Each branch evaluates its own single-branch Omega rate; both branches are
 * advanced with the +/- average of those rates, so the lambda diffusion terms
 * cancel and equal initial amplitudes stay equal. S follows the
 * Hamilton-Jacobi-Madelung equation, which depends on lambda only through
 * lambda^2.
 *
 * Throws ConfigError if dt exceeds madelung_stability_bound, NodeError if a
 * density develops a node, NumericalError if the norm changes by more than 1%
 * in one step.
 */
PhasePair step_coupled_pde(const PhasePair& pair, const ClassicalSpec& spec, const GridSpec& grid, double dt);

PhasePair evolve_pair(PhasePair pair, const ClassicalSpec& spec, const GridSpec& grid, double dt,
                      std::size_t steps);

/// Diagnostic single-sign evolution with the raw single-branch rate. For
/// lambda > 0 the diffusion term is anti-diffusive and the guard will fire.
MadelungState step_single_branch(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid,
                                 double dt);

struct PhaseOffset {
    double S0;
    double max_deviation;
};

/// S0 = mean(S_plus - S_minus); max_deviation = max |S_plus - S_minus - S0|.
PhaseOffset check_phase_offset(const PhasePair& pair);

/// 1/2 |Psi_+|^2 + 1/2 |Psi_-|^2
RealField pair_density(const PhasePair& pair);

struct ChainDistance {
    double density_l2;      // || rho_pair - |psi|^2 ||_2
    double phase_gradient;  // sqrt( integral |psi|^2 (dS_pair - dS_psi)^2 )
};

ChainDistance chain_distance(const PhasePair& pair, const WaveState& reference, const GridSpec& grid);

}  // namespace qaction
