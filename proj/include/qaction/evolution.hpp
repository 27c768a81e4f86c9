#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qaction/hamiltonian.hpp"
#include "qaction/lattice.hpp"

namespace qaction {

/// Wave function on the grid together with its action scale |lambda|.
struct WaveState {
    ComplexField psi;
    double hbar_eff = 1.0;
    double t = 0.0;
};

/// Trapezoidal norm^2 = integral |psi|^2 dq.
double norm2(const WaveState& state, const GridSpec& grid);
double norm2(std::span<const Complex> psi, const GridSpec& grid);

/// Rescales psi so that norm2 = 1. Throws NumericalError on a zero state.
void normalize(ComplexField& psi, const GridSpec& grid);

/// Lattice inner product sum conj(a_i) b_i dq.
Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, const GridSpec& grid);

/// sqrt( integral |a - b|^2 dq )
double l2_distance(std::span<const Complex> a, std::span<const Complex> b, const GridSpec& grid);
double l2_distance(std::span<const double> a, std::span<const double> b, const GridSpec& grid);

/// <psi|H|psi> / <psi|psi>
double energy_expectation(const WaveState& state, const QuantumOperator& H);

/// Position variance of |psi|^2.
double position_mean(std::span<const Complex> psi, const GridSpec& grid);
double position_variance(std::span<const Complex> psi, const GridSpec& grid);

struct GaussianPacket {
    double q0 = 0.0;
    double p0 = 0.0;
    double sigma = 1.0;  // standard deviation of |psi|^2
    double chirp = 0.0;  // adds chirp/2 (q - q0)^2 to the phase S
};

/// R exp(iS/hbar) with R^2 the normal density N(q0, sigma^2) and
/// S = p0 q + chirp/2 (q - q0)^2.
WaveState gaussian_state(const GridSpec& grid, const GaussianPacket& packet, double hbar_eff);

/**
 * Crank-Nicolson stepper (1 + i dt H / 2hbar) psi' = (1 - i dt H / 2hbar) psi.
 *
 * The left-hand matrix is LU-factored once; each step is a matrix-vector
 * product followed by a dense triangular solve.
 */
class CrankNicolson {
public:
    // Throws ConfigError for dt <= 0, NumericalError if the system is singular.
    CrankNicolson(const QuantumOperator& H, double dt);

    void step(WaveState& state) const;
    WaveState advance(WaveState state, std::size_t steps) const;

    double dt() const { return dt_; }

private:
    double dt_;
    double hbar_;
    Eigen::MatrixXcd explicit_half_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> implicit_half_;
};

WaveState propagate_crank_nicolson(const WaveState& state, const QuantumOperator& H, double dt, std::size_t steps);

/// Snapshots psi(t0 + k * interval), k = 0..count, sharing one factorisation.
std::vector<WaveState> record_trajectory(const WaveState& initial, const QuantumOperator& H, double dt,
                                         std::size_t steps_per_snapshot, std::size_t snapshots);

/// Full eigendecomposition of a Hermitian operator (n <= 1024).
class SpectralDecomposition {
public:
    static constexpr std::size_t kMaxSize = 1024;

    explicit SpectralDecomposition(const QuantumOperator& H);

    const Eigen::VectorXd& energies() const { return energies_; }
    const Eigen::MatrixXcd& vectors() const { return vectors_; }
    double hbar_eff() const { return hbar_; }

    /// exp(-i H t / hbar) psi
    WaveState propagate(const WaveState& state, double t) const;

    /// k-th eigenvector normalised to integral |psi|^2 = 1, phase fixed so that
    /// psi at grid.mid_index() is real and positive.
    ComplexField eigenstate(std::size_t k, const GridSpec& grid) const;

private:
    Eigen::VectorXd energies_;
    Eigen::MatrixXcd vectors_;
    double hbar_;
};

WaveState propagate_eigen_oracle(const WaveState& state, const QuantumOperator& H, double t);

struct GroundState {
    double energy;
    ComplexField psi;
};

GroundState ground_state(const QuantumOperator& H);

/// Lowest k eigenvalues of a Hermitian operator, ascending.
std::vector<double> lowest_eigenvalues(const QuantumOperator& H, std::size_t k);

struct WeightedState {
    WaveState state;
    double weight;
};

/// rho(q) = sum_k w_k |psi_k|^2. Weights must be >= 0 and sum to 1 within 1e-12.
RealField aggregate_density(std::span<const WeightedState> states);

}  // namespace qaction
