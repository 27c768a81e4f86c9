#include "qaction/evolution.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

Eigen::Map<const Eigen::VectorXcd> as_vector(std::span<const Complex> psi) {
    return {psi.data(), static_cast<Eigen::Index>(psi.size())};
}

Eigen::Map<Eigen::VectorXcd> as_vector(ComplexField& psi) {
    return {psi.data(), static_cast<Eigen::Index>(psi.size())};
}

void check_operator_matches(const WaveState& state, const QuantumOperator& H) {
    check_shape(state.psi, H.grid);
    if (std::abs(state.hbar_eff - H.hbar_eff) > 1e-14 * H.hbar_eff) {
        throw ConfigError(fmt::format("state hbar_eff {} does not match operator hbar_eff {}", state.hbar_eff,
                                      H.hbar_eff));
    }
}

}  // namespace

double norm2(std::span<const Complex> psi, const GridSpec& grid) { return integrate(abs2(psi), grid); }

double norm2(const WaveState& state, const GridSpec& grid) { return norm2(state.psi, grid); }

void normalize(ComplexField& psi, const GridSpec& grid) {
    const double n2 = norm2(psi, grid);
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("cannot normalise a zero or non-finite state");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& z : psi) z *= s;
}

Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, const GridSpec& grid) {
    check_shape(a, grid);
    check_shape(b, grid);
    return as_vector(a).dot(as_vector(b)) * grid.dq();
}

double l2_distance(std::span<const Complex> a, std::span<const Complex> b, const GridSpec& grid) {
    check_shape(a, grid);
    check_shape(b, grid);
    RealField d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::norm(a[i] - b[i]);
    return std::sqrt(integrate(d, grid));
}

double l2_distance(std::span<const double> a, std::span<const double> b, const GridSpec& grid) {
    check_shape(a, grid);
    check_shape(b, grid);
    RealField d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(integrate(d, grid));
}

double energy_expectation(const WaveState& state, const QuantumOperator& H) {
    check_shape(state.psi, H.grid);
    const auto v = as_vector(state.psi);
    const Complex num = v.dot(H.matrix * v);
    return num.real() / v.squaredNorm();
}

double position_mean(std::span<const Complex> psi, const GridSpec& grid) {
    RealField rho = abs2(psi);
    const double n2 = integrate(rho, grid);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] *= grid.point(i);
    return integrate(rho, grid) / n2;
}

double position_variance(std::span<const Complex> psi, const GridSpec& grid) {
    const double mean = position_mean(psi, grid);
    RealField rho = abs2(psi);
    const double n2 = integrate(rho, grid);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double d = grid.point(i) - mean;
        rho[i] *= d * d;
    }
    return integrate(rho, grid) / n2;
}

WaveState gaussian_state(const GridSpec& grid, const GaussianPacket& packet, double hbar_eff) {
    if (!(packet.sigma > 0.0)) throw ConfigError("Gaussian width must be positive");
    if (!(hbar_eff > 0.0)) throw ConfigError("hbar_eff must be positive");
    const double s2 = packet.sigma * packet.sigma;
    const double amp = std::pow(2.0 * std::numbers::pi * s2, -0.25);
    WaveState st{ComplexField(grid.n()), hbar_eff, 0.0};
    for (std::size_t i = 0; i < grid.n(); ++i) {
        const double q = grid.point(i);
        const double d = q - packet.q0;
        const double R = amp * std::exp(-d * d / (4.0 * s2));
        const double S = packet.p0 * q + 0.5 * packet.chirp * d * d;
        st.psi[i] = std::polar(R, S / hbar_eff);
    }
    return st;
}

CrankNicolson::CrankNicolson(const QuantumOperator& H, double dt) : dt_(dt), hbar_(H.hbar_eff) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError(fmt::format("time step must be positive, got {}", dt));
    const auto n = H.matrix.rows();
    const Complex half(0.0, 0.5 * dt / hbar_);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
    explicit_half_ = I - half * H.matrix;
    implicit_half_.compute(I + half * H.matrix);
    const double rcond = implicit_half_.rcond();
    if (!(rcond > 1e-14)) {
        throw NumericalError(fmt::format("Crank-Nicolson system is singular (rcond {:.3e})", rcond));
    }
}

void CrankNicolson::step(WaveState& state) const {
    auto v = as_vector(state.psi);
    const Eigen::VectorXcd rhs = explicit_half_ * v;
    v = implicit_half_.solve(rhs);
    state.t += dt_;
}

WaveState CrankNicolson::advance(WaveState state, std::size_t steps) const {
    const double t0 = state.t;
    for (std::size_t k = 0; k < steps; ++k) step(state);
    // Avoid accumulating round-off in the clock.
    state.t = t0 + static_cast<double>(steps) * dt_;
    return state;
}

WaveState propagate_crank_nicolson(const WaveState& state, const QuantumOperator& H, double dt, std::size_t steps) {
    check_operator_matches(state, H);
    if (!(dt > 0.0)) throw ConfigError(fmt::format("time step must be positive, got {}", dt));
    if (steps == 0) return state;
    return CrankNicolson(H, dt).advance(state, steps);
}

std::vector<WaveState> record_trajectory(const WaveState& initial, const QuantumOperator& H, double dt,
                                         std::size_t steps_per_snapshot, std::size_t snapshots) {
    check_operator_matches(initial, H);
    const CrankNicolson cn(H, dt);
    std::vector<WaveState> out;
    out.reserve(snapshots + 1);
    out.push_back(initial);
    for (std::size_t k = 1; k <= snapshots; ++k) {
        WaveState next = cn.advance(out.back(), steps_per_snapshot);
        next.t = initial.t + static_cast<double>(k * steps_per_snapshot) * dt;
        out.push_back(std::move(next));
    }
    return out;
}

SpectralDecomposition::SpectralDecomposition(const QuantumOperator& H) : hbar_(H.hbar_eff) {
    if (H.grid.n() > kMaxSize) {
        throw ConfigError(fmt::format("dense eigensolve limited to n <= {}, got {}", kMaxSize, H.grid.n()));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H.matrix);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
}

WaveState SpectralDecomposition::propagate(const WaveState& state, double t) const {
    const Eigen::VectorXcd coeff = vectors_.adjoint() * as_vector(state.psi);
    Eigen::VectorXcd phased(coeff.size());
    for (Eigen::Index k = 0; k < coeff.size(); ++k) phased(k) = coeff(k) * std::polar(1.0, -energies_(k) * t / hbar_);
    WaveState out{ComplexField(state.psi.size()), state.hbar_eff, state.t + t};
    as_vector(out.psi) = vectors_ * phased;
    return out;
}

ComplexField SpectralDecomposition::eigenstate(std::size_t k, const GridSpec& grid) const {
    const auto col = vectors_.col(static_cast<Eigen::Index>(k));
    ComplexField psi(col.data(), col.data() + col.size());
    const Complex pin = psi[grid.mid_index()];
    const Complex phase = std::abs(pin) > 0.0 ? std::conj(pin) / std::abs(pin) : Complex(1.0);
    for (auto& z : psi) z *= phase;
    normalize(psi, grid);
    return psi;
}

WaveState propagate_eigen_oracle(const WaveState& state, const QuantumOperator& H, double t) {
    check_operator_matches(state, H);
    if (t == 0.0) return state;
    return SpectralDecomposition(H).propagate(state, t);
}

GroundState ground_state(const QuantumOperator& H) {
    const SpectralDecomposition spectral(H);
    return {spectral.energies()(0), spectral.eigenstate(0, H.grid)};
}

std::vector<double> lowest_eigenvalues(const QuantumOperator& H, std::size_t k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H.matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    const auto& ev = solver.eigenvalues();
    k = std::min<std::size_t>(k, static_cast<std::size_t>(ev.size()));
    return {ev.data(), ev.data() + k};
}

RealField aggregate_density(std::span<const WeightedState> states) {
    if (states.empty()) throw ConfigError("aggregate_density needs at least one state");
    double total = 0.0;
    for (const auto& ws : states) {
        if (!(ws.weight >= 0.0)) throw ConfigError(fmt::format("negative weight {}", ws.weight));
        total += ws.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError(fmt::format("weights sum to {}, expected 1", total));

    const std::size_t n = states.front().state.psi.size();
    RealField rho(n, 0.0);
    for (const auto& ws : states) {
        if (ws.state.psi.size() != n) throw ShapeError("aggregate_density: states on different grids");
        for (std::size_t i = 0; i < n; ++i) rho[i] += ws.weight * std::norm(ws.state.psi[i]);
    }
    return rho;
}

}  // namespace qaction
