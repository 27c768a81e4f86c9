#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qaction/errors.hpp"
#include "qaction/madelung.hpp"

using namespace qaction;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_abs_diff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("to_polar of simple states") {
    const GridSpec grid = build_grid(201, -6.0, 6.0);
    const WaveState real = gaussian_state(grid, {0.0, 0.0, 1.0, 0.0}, 1.0);
    const MadelungState m = to_polar(real, grid);
    for (double s : m.S) CHECK(std::abs(s) < 1e-14);
    CHECK(m.lambda == 1.0);
    CHECK(to_polar(real, grid, -1).lambda == -1.0);

    // A plane-wave factor winds many times across the grid; unwrapping keeps S linear.
    const double p0 = 7.3, hbar = 0.5;
    const WaveState wave = gaussian_state(grid, {0.0, p0, 1.0, 0.0}, hbar);
    const MadelungState w = to_polar(wave, grid);
    for (std::size_t i = 1; i < grid.n(); ++i) CHECK((w.S[i] - w.S[i - 1]) / grid.dq() == doctest::Approx(p0).epsilon(1e-10));
    CHECK(std::abs(w.S[grid.mid_index()]) <= std::numbers::pi * hbar);

    const WaveState back = from_polar(w);
    CHECK(l2_distance(back.psi, wave.psi, grid) < 1e-10);
    CHECK(back.hbar_eff == hbar);
}

TEST_CASE("to_polar rejects nodes") {
    const GridSpec grid = build_grid(64, -3.0, 3.0);
    WaveState s = gaussian_state(grid, {}, 1.0);
    s.psi[20] = 0.0;
    CHECK_THROWS_AS(to_polar(s, grid), NodeError);
}

TEST_CASE("single-valuedness of the branch offset") {
    const GridSpec grid = build_grid(101, -5.0, 5.0);
    const double hbar = 0.8;
    const WaveState s = gaussian_state(grid, {0.2, 1.1, 1.0, 0.4}, hbar);
    const MadelungState m = to_polar(s, grid);
    for (int n : {-2, -1, 0, 1, 3}) {
        MadelungState shifted = m;
        for (double& v : shifted.S) v += n * kTwoPi * hbar;
        const WaveState a = from_polar(m), b = from_polar(shifted);
        double err = 0.0;
        for (std::size_t i = 0; i < grid.n(); ++i) err = std::max(err, std::abs(a.psi[i] - b.psi[i]));
        CHECK(err < 1e-12);
    }
    const PhasePair half = make_pair(s, grid, 0.5 * kTwoPi * hbar);
    const WaveState plus = from_polar(half.plus), minus = from_polar(half.minus);
    double err = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) err = std::max(err, std::abs(plus.psi[i] + minus.psi[i]));
    CHECK(err < 1e-12);
}

TEST_CASE("quantum potential") {
    const GridSpec grid = build_grid(401, -8.0, 8.0);
    PresetParams prm;
    prm.mass = 1.5;
    const ClassicalSpec free = make_preset(Preset::free, prm);
    for (double q : quantum_potential(RealField(grid.n(), 0.3), free, grid, 1.0)) CHECK(std::abs(q) < 1e-12);

    const double sigma = 1.1, lambda = 0.9;
    const RealField R = sample(grid, [&](double q) { return std::exp(-q * q / (4 * sigma * sigma)); });
    const RealField Q = quantum_potential(R, free, grid, lambda);
    for (std::size_t i = 1; i + 1 < grid.n(); ++i) {
        const double q = grid.point(i);
        const double s2 = sigma * sigma;
        const double expected = -(lambda * lambda / (2 * prm.mass)) * (q * q / (4 * s2 * s2) - 1 / (2 * s2));
        CHECK(Q[i] == doctest::Approx(expected).epsilon(1e-3).scale(1.0));
    }
    const RealField Q2 = quantum_potential(R, free, grid, 2 * lambda);
    for (std::size_t i = 0; i < grid.n(); ++i) CHECK(Q2[i] == 4.0 * Q[i]);

    // The lambda^2 ratio between 0.02 and 0.01.
    const RealField a = quantum_potential(R, free, grid, 0.02), b = quantum_potential(R, free, grid, 0.01);
    CHECK(a[200] / b[200] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("check_phase_offset") {
    const GridSpec grid = build_grid(64, -4.0, 4.0);
    const WaveState s = gaussian_state(grid, {0.0, 0.5, 1.0, 0.0}, 1.0);
    const PhasePair same = make_pair(s, grid, 0.0);
    CHECK(check_phase_offset(same).S0 == 0.0);
    CHECK(check_phase_offset(same).max_deviation == 0.0);
    const PhasePair h = make_pair(s, grid, kTwoPi);
    CHECK(check_phase_offset(h).S0 == doctest::Approx(kTwoPi).epsilon(1e-14));
    CHECK(check_phase_offset(h).max_deviation < 1e-14);
}

TEST_CASE("branch rates average to the continuity rate") {
    const GridSpec grid = build_grid(301, -6.0, 6.0);
    PresetParams prm;
    prm.beta = 0.3;
    const ClassicalSpec vm = make_preset(Preset::variable_mass, prm);
    const PhasePair pair = make_pair(gaussian_state(grid, {0.4, 0.7, 0.9, 0.3}, 1.0), grid, kTwoPi);
    const RealField plus = branch_density_rate(pair.plus, vm, grid);
    const RealField minus = branch_density_rate(pair.minus, vm, grid);
    const RealField cont = continuity_rate(pair.plus, vm, grid);
    for (std::size_t i = 0; i < grid.n(); ++i) CHECK(std::abs(0.5 * (plus[i] + minus[i]) - cont[i]) < 1e-6);
}

TEST_CASE("stability bound is enforced") {
    const GridSpec grid = build_grid(101, -5.0, 5.0);
    const ClassicalSpec h = make_preset(Preset::harmonic);
    const PhasePair pair = make_pair(gaussian_state(grid, {}, 1.0), grid, kTwoPi);
    const double bound = madelung_stability_bound(h, grid, 1.0);
    CHECK(bound == doctest::Approx(0.1 * grid.dq() * grid.dq()));
    CHECK_THROWS_AS(step_coupled_pde(pair, h, grid, 1.01 * bound), ConfigError);
    CHECK_NOTHROW(step_coupled_pde(pair, h, grid, bound));
}

TEST_CASE("ground state stays stationary") {
    const GridSpec grid = build_grid(185, -4.6, 4.6);
    const ClassicalSpec h = make_preset(Preset::harmonic);
    const GroundState gs = ground_state(build_quantum_hamiltonian(h, grid, 1.0));
    const PhasePair p0 = make_pair({gs.psi, 1.0, 0.0}, grid, kTwoPi);
    const double dt = madelung_stability_bound(h, grid, 1.0);
    const auto steps = static_cast<std::size_t>(std::ceil(1.0 / dt));
    const PhasePair p1 = evolve_pair(p0, h, grid, 1.0 / static_cast<double>(steps), steps);
    CHECK(max_abs_diff(p1.plus.R, p0.plus.R) < 1e-4);
    // S falls at the rate E0 everywhere.
    const double mid = p1.plus.S[grid.mid_index()] - p0.plus.S[grid.mid_index()];
    CHECK(mid == doctest::Approx(-gs.energy).epsilon(1e-6));
}

TEST_CASE("offset and amplitude symmetry are preserved") {
    const GridSpec grid = build_grid(161, -6.0, 6.0);
    PresetParams prm;
    prm.beta = 0.3;
    const ClassicalSpec vm = make_preset(Preset::variable_mass, prm);
    PhasePair pair = make_pair(gaussian_state(grid, {0.5, 0.3, 1.0, 0.0}, 1.0), grid, kTwoPi);
    const double dt = madelung_stability_bound(vm, grid, 1.0);
    pair = evolve_pair(pair, vm, grid, dt, 1000);
    const PhaseOffset off = check_phase_offset(pair);
    CHECK(off.S0 == doctest::Approx(kTwoPi).epsilon(1e-4 / kTwoPi));
    CHECK(off.max_deviation < 1e-4);
    CHECK(max_abs_diff(pair.plus.R, pair.minus.R) < 1e-6);
    CHECK(integrate(pair.plus.density(), grid) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("chain equivalence for a free Gaussian") {
    const GridSpec grid = build_grid(701, -7.0, 7.0);
    const ClassicalSpec free = make_preset(Preset::free);
    const WaveState s0 = gaussian_state(grid, {0.0, 0.0, 1.0, 0.0}, 1.0);
    const QuantumOperator H = build_quantum_hamiltonian(free, grid, 1.0);
    const WaveState ref = propagate_crank_nicolson(s0, H, 1e-3, 500);
    const double bound = madelung_stability_bound(free, grid, 1.0);
    const auto steps = static_cast<std::size_t>(std::ceil(0.5 / bound));
    const PhasePair pair = evolve_pair(make_pair(s0, grid, kTwoPi), free, grid, 0.5 / static_cast<double>(steps), steps);
    const ChainDistance d = chain_distance(pair, ref, grid);
    CHECK(d.density_l2 < 1e-3);
    CHECK(d.phase_gradient < 1e-2);
}

TEST_CASE("single branch diagnostic") {
    const GridSpec grid = build_grid(81, -5.0, 5.0);
    const ClassicalSpec free = make_preset(Preset::free);
    const WaveState s = gaussian_state(grid, {0.0, 0.0, 1.0, 0.0}, 1.0);
    const double dt = madelung_stability_bound(free, grid, 1.0);
    // The negative branch diffuses: its density flattens and stays normalisable.
    MadelungState neg = to_polar(s, grid, -1);
    for (int k = 0; k < 50; ++k) neg = step_single_branch(neg, free, grid, dt);
    CHECK(neg.t == doctest::Approx(50 * dt));
    CHECK(integrate(neg.density(), grid) == doctest::Approx(1.0).epsilon(1e-2));
    // The positive branch is anti-diffusive; the guard eventually aborts it.
    MadelungState pos = to_polar(s, grid, +1);
    bool aborted = false;
    try {
        for (int k = 0; k < 200000 && !aborted; ++k) pos = step_single_branch(pos, free, grid, dt);
    } catch (const NumericalError&) {
        aborted = true;
    } catch (const NodeError&) {
        aborted = true;
    }
    CHECK(aborted);
}
