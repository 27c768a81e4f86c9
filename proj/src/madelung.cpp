#include "qaction/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

RealField amplitude_of(std::span<const double> omega) {
    RealField R(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) R[i] = std::sqrt(std::max(omega[i], 0.0));
    return R;
}

// Coupled right-hand side in (Omega, S) variables for one branch.
struct BranchVars {
    RealField omega;
    RealField S;
};

MadelungState as_state(const BranchVars& b, double lambda, double t) {
    return {amplitude_of(b.omega), b.S, lambda, t};
}

void axpy(RealField& y, double a, const RealField& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

RealField MadelungState::density() const {
    RealField d(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) d[i] = R[i] * R[i];
    return d;
}

MadelungState to_polar(const WaveState& state, const GridSpec& grid, int sign) {
    check_shape(state.psi, grid);
    require_node_free(abs2(state.psi), "to_polar");
    const std::size_t n = grid.n();
    const double hbar = state.hbar_eff;

    RealField phase(n);
    phase[0] = std::arg(state.psi[0]);
    for (std::size_t i = 1; i < n; ++i) {
        phase[i] = phase[i - 1] + std::arg(state.psi[i] * std::conj(state.psi[i - 1]));
    }
    const std::size_t mid = grid.mid_index();
    const double shift = std::round((phase[mid] - std::arg(state.psi[mid])) / kTwoPi) * kTwoPi;

    MadelungState m;
    m.R.resize(n);
    m.S.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.R[i] = std::abs(state.psi[i]);
        m.S[i] = hbar * (phase[i] - shift);
    }
    m.lambda = sign >= 0 ? hbar : -hbar;
    m.t = state.t;
    return m;
}

WaveState from_polar(const MadelungState& m) {
    const double scale = std::abs(m.lambda);
    if (!(scale > 0.0)) throw ConfigError("lambda must be non-zero");
    WaveState w{ComplexField(m.R.size()), scale, m.t};
    for (std::size_t i = 0; i < m.R.size(); ++i) w.psi[i] = std::polar(m.R[i], m.S[i] / scale);
    return w;
}

PhasePair make_pair(const WaveState& state, const GridSpec& grid, double S0) {
    PhasePair pair;
    pair.plus = to_polar(state, grid, +1);
    pair.minus = pair.plus;
    pair.minus.lambda = -pair.plus.lambda;
    for (auto& s : pair.minus.S) s -= S0;
    pair.S0 = S0;
    return pair;
}

RealField phase_gradient(std::span<const Complex> psi, const GridSpec& grid, double hbar) {
    check_shape(psi, grid);
    const std::size_t n = grid.n();
    const double inv2h = 0.5 / grid.dq();
    auto dphi = [&](std::size_t i) { return std::arg(psi[i + 1] * std::conj(psi[i])); };  // phase_{i+1} - phase_i

    RealField d(n);
    d[0] = (4.0 * dphi(0) - (dphi(0) + dphi(1))) * inv2h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (dphi(i - 1) + dphi(i)) * inv2h;
    d[n - 1] = (4.0 * dphi(n - 2) - (dphi(n - 2) + dphi(n - 3))) * inv2h;
    for (auto& x : d) x *= hbar;
    return d;
}

RealField quantum_potential(std::span<const double> R, const ClassicalSpec& spec, const GridSpec& grid,
                            double lambda) {
    check_shape(R, grid);
    RealField omega(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) omega[i] = R[i] * R[i];
    require_node_free(omega, "quantum_potential");

    const RealField dR = gradient(R, grid);
    const RealField d2R = second_derivative(R, grid);
    RealField Q(R.size());
    const double pref = -0.5 * lambda * lambda;
    for (std::size_t i = 0; i < R.size(); ++i) {
        const double q = grid.point(i);
        Q[i] = pref * (spec.g(q) * d2R[i] + spec.dg(q) * dR[i]) / R[i];
    }
    return Q;
}

RealField continuity_rate(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid) {
    check_shape(m.R, grid);
    RealField flux = velocity_field(m.S, spec, grid);
    for (std::size_t i = 0; i < flux.size(); ++i) flux[i] *= m.R[i] * m.R[i];
    RealField rate = gradient(flux, grid);
    for (auto& r : rate) r = -r;
    return rate;
}

RealField branch_density_rate(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid) {
    RealField rate = continuity_rate(m, spec, grid);
    RealField diff = gradient(m.density(), grid);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] *= spec.g(grid.point(i));
    const RealField div = gradient(diff, grid);
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] -= 0.5 * m.lambda * div[i];
    return rate;
}

RealField action_rate(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid) {
    check_shape(m.S, grid);
    const RealField dS = gradient(m.S, grid);
    const RealField Q = quantum_potential(m.R, spec, grid, m.lambda);
    RealField rate(dS.size());
    for (std::size_t i = 0; i < rate.size(); ++i) {
        const double q = grid.point(i);
        const double k = dS[i] - spec.A(q);
        rate[i] = -(0.5 * spec.g(q) * k * k + spec.V(q) + Q[i]);
    }
    return rate;
}

double madelung_stability_bound(const ClassicalSpec& spec, const GridSpec& grid, double lambda) {
    double gmax = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) gmax = std::max(gmax, spec.g(grid.point(i)));
    return 0.1 * grid.dq() * grid.dq() / (std::abs(lambda) * gmax);
}

namespace {

void check_step(const ClassicalSpec& spec, const GridSpec& grid, double lambda, double dt) {
    if (!(dt > 0.0)) throw ConfigError(fmt::format("time step must be positive, got {}", dt));
    const double bound = madelung_stability_bound(spec, grid, lambda);
    if (dt > bound * (1.0 + 1e-12)) {
        throw ConfigError(fmt::format("dt = {:.3e} exceeds the explicit stability bound {:.3e}", dt, bound));
    }
}

void guard_norm(const RealField& before, const RealField& after, const GridSpec& grid) {
    check_finite(after, "madelung density");
    const double n0 = integrate(before, grid);
    const double n1 = integrate(after, grid);
    if (!(std::abs(n1 - n0) <= 0.01 * std::abs(n0))) {
        throw NumericalError(fmt::format("density norm jumped from {:.6g} to {:.6g} in one step", n0, n1));
    }
}

struct PairVars {
    BranchVars plus;
    BranchVars minus;
};

struct PairRates {
    RealField omega;  // shared +/- averaged rate
    RealField S_plus;
    RealField S_minus;
};

// Overwrites the two outermost rates on each side by quadratic extrapolation
// of the three nearest interior values. Applied to d(ln Omega)/dt and dS/dt,
// both of which are quadratic in q for Gaussian states.
void extrapolate_edges(RealField& r) {
    const std::size_t n = r.size();
    auto quad = [](double f1, double f2, double f3, double steps) {
        // Lagrange extrapolation from nodes at distance 1, 2, 3 to distance 1 - steps.
        const double x = 1.0 - steps;
        return f1 * (x - 2.0) * (x - 3.0) / 2.0 - f2 * (x - 1.0) * (x - 3.0) + f3 * (x - 1.0) * (x - 2.0) / 2.0;
    };
    r[1] = quad(r[2], r[3], r[4], 1.0);
    r[0] = quad(r[2], r[3], r[4], 2.0);
    r[n - 2] = quad(r[n - 3], r[n - 4], r[n - 5], 1.0);
    r[n - 1] = quad(r[n - 3], r[n - 4], r[n - 5], 2.0);
}

void close_density_rate(RealField& rate, const RealField& omega) {
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] /= omega[i];
    extrapolate_edges(rate);
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] *= omega[i];
}

PairRates pair_rates(const PairVars& v, double lam_plus, double lam_minus, const ClassicalSpec& spec,
                     const GridSpec& grid) {
    require_node_free(v.plus.omega, "step_coupled_pde(+)");
    require_node_free(v.minus.omega, "step_coupled_pde(-)");
    const MadelungState p = as_state(v.plus, lam_plus, 0.0);
    const MadelungState m = as_state(v.minus, lam_minus, 0.0);
    PairRates r;
    r.omega = branch_density_rate(p, spec, grid);
    const RealField rm = branch_density_rate(m, spec, grid);
    for (std::size_t i = 0; i < r.omega.size(); ++i) r.omega[i] = 0.5 * (r.omega[i] + rm[i]);
    close_density_rate(r.omega, v.plus.omega);
    r.S_plus = action_rate(p, spec, grid);
    r.S_minus = action_rate(m, spec, grid);
    extrapolate_edges(r.S_plus);
    extrapolate_edges(r.S_minus);
    return r;
}

PairVars advanced(const PairVars& v, double h, const PairRates& r) {
    PairVars out = v;
    axpy(out.plus.omega, h, r.omega);
    axpy(out.minus.omega, h, r.omega);
    axpy(out.plus.S, h, r.S_plus);
    axpy(out.minus.S, h, r.S_minus);
    return out;
}

}  // namespace

PhasePair step_coupled_pde(const PhasePair& pair, const ClassicalSpec& spec, const GridSpec& grid, double dt) {
    check_shape(pair.plus.R, grid);
    check_shape(pair.minus.R, grid);
    const double lp = pair.plus.lambda;
    const double lm = pair.minus.lambda;
    check_step(spec, grid, std::max(std::abs(lp), std::abs(lm)), dt);

    const PairVars v0{{pair.plus.density(), pair.plus.S}, {pair.minus.density(), pair.minus.S}};
    const PairRates k1 = pair_rates(v0, lp, lm, spec, grid);
    const PairRates k2 = pair_rates(advanced(v0, 0.5 * dt, k1), lp, lm, spec, grid);
    const PairRates k3 = pair_rates(advanced(v0, 0.5 * dt, k2), lp, lm, spec, grid);
    const PairRates k4 = pair_rates(advanced(v0, dt, k3), lp, lm, spec, grid);

    PairVars v1 = v0;
    for (const auto& [k, w] : {std::pair{&k1, 1.0}, {&k2, 2.0}, {&k3, 2.0}, {&k4, 1.0}}) {
        v1 = advanced(v1, dt * w / 6.0, *k);
    }
    guard_norm(v0.plus.omega, v1.plus.omega, grid);
    guard_norm(v0.minus.omega, v1.minus.omega, grid);
    require_node_free(v1.plus.omega, "step_coupled_pde(+)");
    require_node_free(v1.minus.omega, "step_coupled_pde(-)");

    PhasePair out;
    out.plus = as_state(v1.plus, lp, pair.plus.t + dt);
    out.minus = as_state(v1.minus, lm, pair.minus.t + dt);
    out.S0 = pair.S0;
    return out;
}

PhasePair evolve_pair(PhasePair pair, const ClassicalSpec& spec, const GridSpec& grid, double dt,
                      std::size_t steps) {
    const double t0 = pair.plus.t;
    for (std::size_t k = 0; k < steps; ++k) pair = step_coupled_pde(pair, spec, grid, dt);
    pair.plus.t = pair.minus.t = t0 + static_cast<double>(steps) * dt;
    return pair;
}

MadelungState step_single_branch(const MadelungState& m, const ClassicalSpec& spec, const GridSpec& grid,
                                 double dt) {
    check_shape(m.R, grid);
    check_step(spec, grid, m.lambda, dt);

    auto rates = [&](const BranchVars& b) {
        require_node_free(b.omega, "step_single_branch");
        const MadelungState s = as_state(b, m.lambda, 0.0);
        return std::pair{branch_density_rate(s, spec, grid), action_rate(s, spec, grid)};
    };
    auto shifted = [](BranchVars b, double h, const std::pair<RealField, RealField>& r) {
        axpy(b.omega, h, r.first);
        axpy(b.S, h, r.second);
        return b;
    };

    const BranchVars b0{m.density(), m.S};
    const auto k1 = rates(b0);
    const auto k2 = rates(shifted(b0, 0.5 * dt, k1));
    const auto k3 = rates(shifted(b0, 0.5 * dt, k2));
    const auto k4 = rates(shifted(b0, dt, k3));
    BranchVars b1 = b0;
    b1 = shifted(b1, dt / 6.0, k1);
    b1 = shifted(b1, dt / 3.0, k2);
    b1 = shifted(b1, dt / 3.0, k3);
    b1 = shifted(b1, dt / 6.0, k4);

    guard_norm(b0.omega, b1.omega, grid);
    require_node_free(b1.omega, "step_single_branch");
    return as_state(b1, m.lambda, m.t + dt);
}

PhaseOffset check_phase_offset(const PhasePair& pair) {
    const auto& a = pair.plus.S;
    const auto& b = pair.minus.S;
    if (a.size() != b.size() || a.empty()) throw ShapeError("check_phase_offset: misaligned pair");
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(a.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i] - mean));
    return {mean, worst};
}

RealField pair_density(const PhasePair& pair) {
    RealField rho(pair.plus.R.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        rho[i] = 0.5 * (pair.plus.R[i] * pair.plus.R[i] + pair.minus.R[i] * pair.minus.R[i]);
    }
    return rho;
}

ChainDistance chain_distance(const PhasePair& pair, const WaveState& reference, const GridSpec& grid) {
    check_shape(reference.psi, grid);
    const RealField rho_ref = abs2(reference.psi);
    const RealField rho_pair = pair_density(pair);
    const RealField grad_pair = gradient(pair.plus.S, grid);
    const RealField grad_ref = phase_gradient(reference.psi, grid, reference.hbar_eff);

    RealField weighted(grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i) {
        const double d = grad_pair[i] - grad_ref[i];
        weighted[i] = rho_ref[i] * d * d;
    }
    return {l2_distance(rho_pair, rho_ref, grid), std::sqrt(integrate(weighted, grid))};
}

}  // namespace qaction
