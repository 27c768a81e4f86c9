#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qaction/classical.hpp"
#include "qaction/errors.hpp"

using namespace qaction;

namespace {

// Hamilton's principal function of the unit oscillator between (q0, 0) and (q1, T).
double oscillator_action(double q0, double q1, double T) {
    return ((q0 * q0 + q1 * q1) * std::cos(T) - 2.0 * q0 * q1) / (2.0 * std::sin(T));
}

RealField harmonic_positions(double q0, double p0, double dt, std::size_t steps) {
    RealField q(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = dt * static_cast<double>(i);
        q[i] = q0 * std::cos(t) + p0 * std::sin(t);
    }
    return q;
}

}  // namespace

TEST_CASE("path records validate their input") {
    CHECK_THROWS_AS(PathRecord({{0.0, 0.0, 0.0}}), ConfigError);
    CHECK_THROWS_AS(PathRecord({{0.0, 0.0, 0.0}, {0.0, 0.0, 0.1}, {0.0, 0.0, 0.3}}), ConfigError);
    CHECK_THROWS_AS(PathRecord({{0.0, 0.0, 0.0}, {NAN, 0.0, 0.1}}), ConfigError);
    const PathRecord ok({{0.0, 1.0, 0.0}, {0.1, 1.0, 0.1}, {0.2, 1.0, 0.2}});
    CHECK(ok.size() == 3);
    CHECK(ok.dt() == doctest::Approx(0.1));
    CHECK(ok.positions() == RealField{0.0, 0.1, 0.2});
}

TEST_CASE("free motion is integrated exactly") {
    const ClassicalSpec free = make_preset(Preset::free);
    const PhasePoint end = hamilton_step({0.3, 1.5, 0.0}, free, 0.2);
    CHECK(end.q == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(end.p == 1.5);
    CHECK(end.t == doctest::Approx(0.2));
    CHECK_THROWS_AS(hamilton_step({0.0, 0.0, 0.0}, free, 0.0), ConfigError);
}

TEST_CASE("harmonic oscillator: period and energy") {
    const ClassicalSpec h = make_preset(Preset::harmonic);
    const std::size_t n = 10000;
    const PathRecord cycle = integrate_hamilton({1.0, 0.0, 0.0}, h, 2.0 * std::numbers::pi / n, n);
    CHECK(std::abs(cycle[n].q - 1.0) < 1e-5);
    CHECK(std::abs(cycle[n].p) < 1e-5);

    const PathRecord long_run = integrate_hamilton({1.0, 0.0, 0.0}, h, 1e-4, 100000);
    const double e0 = h.hamiltonian(1.0, 0.0);
    double worst = 0.0;
    for (const PhasePoint& pt : long_run.points()) worst = std::max(worst, std::abs(h.hamiltonian(pt.q, pt.p) - e0));
    CHECK(worst / e0 < 1e-8);
}

TEST_CASE("variable mass: implicit step converges and is reversible") {
    PresetParams prm;
    prm.beta = 0.3;
    const ClassicalSpec vm = make_preset(Preset::variable_mass, prm);
    const PhasePoint a{0.8, -0.6, 0.0};
    const PhasePoint b = hamilton_step(a, vm, 0.01);
    const PhasePoint back = hamilton_step({b.q, -b.p, 0.0}, vm, 0.01);
    CHECK(back.q == doctest::Approx(a.q).epsilon(1e-11));
    CHECK(-back.p == doctest::Approx(a.p).epsilon(1e-11));

    const PathRecord run = integrate_hamilton(a, vm, 1e-3, 20000);
    const double e0 = vm.hamiltonian(a.q, a.p);
    double worst = 0.0;
    for (const PhasePoint& pt : run.points()) worst = std::max(worst, std::abs(vm.hamiltonian(pt.q, pt.p) - e0));
    CHECK(worst / e0 < 1e-6);

    prm.a0 = 0.4;
    prm.a1 = 0.2;
    const ClassicalSpec gauged = make_preset(Preset::gauged, prm);
    const PathRecord gr = integrate_hamilton({0.5, 1.0, 0.0}, gauged, 1e-3, 5000);
    const double eg = gauged.hamiltonian(0.5, 1.0);
    CHECK(std::abs(gauged.hamiltonian(gr[5000].q, gr[5000].p) - eg) / eg < 1e-6);
}

TEST_CASE("action of simple paths") {
    const ClassicalSpec free = make_preset(Preset::free);
    CHECK(action_of_path(integrate_hamilton({2.0, 0.0, 0.0}, free, 0.01, 100), free) == 0.0);
    CHECK(action_of_path(integrate_hamilton({0.0, 1.0, 0.0}, free, 0.01, 100), free) ==
          doctest::Approx(0.5).epsilon(1e-12));

    const ClassicalSpec h = make_preset(Preset::harmonic);
    const double dt = 1e-3;
    const PathRecord path = integrate_hamilton({1.0, 0.5, 0.0}, h, dt, 1000);
    const double exact = oscillator_action(1.0, path[1000].q, 1.0);
    CHECK(std::abs(action_of_path(path, h) - exact) < 1e-6);

    const RealField q = harmonic_positions(1.0, 0.5, dt, 1000);
    const double from_positions = action_of_path(path_from_positions(q, 0.0, dt, h), h);
    CHECK(std::abs(from_positions - oscillator_action(1.0, q.back(), 1.0)) < 1e-5);
}

TEST_CASE("Euler-Lagrange residual") {
    const ClassicalSpec free = make_preset(Preset::free);
    RealField line(101);
    for (std::size_t i = 0; i < line.size(); ++i) line[i] = 0.2 + 0.7 * 0.01 * static_cast<double>(i);
    const RealField r0 = euler_lagrange_residual(path_from_positions(line, 0.0, 0.01, free), free);
    REQUIRE(r0.size() == 99);
    for (double r : r0) CHECK(std::abs(r) < 1e-10);

    const ClassicalSpec h = make_preset(Preset::harmonic);
    const double dt = 1e-3;
    const PathRecord leap = integrate_hamilton({1.0, 0.0, 0.0}, h, dt, 2000);
    double worst = 0.0;
    for (double r : euler_lagrange_residual(leap, h)) worst = std::max(worst, std::abs(r));
    CHECK(worst < 1e-5);

    auto bumped_norm = [&](double eps) {
        RealField q = leap.positions();
        const double T = dt * static_cast<double>(q.size() - 1);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += eps * std::sin(std::numbers::pi * dt * static_cast<double>(i) / T);
        double s = 0.0;
        for (double r : euler_lagrange_residual(path_from_positions(q, 0.0, dt, h), h)) s += r * r;
        return std::sqrt(s);
    };
    const double ratio = bumped_norm(2e-2) / bumped_norm(1e-2);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("classical paths are stationary points of the action") {
    const ClassicalSpec h = make_preset(Preset::harmonic);
    const double dt = 1e-3;
    const std::size_t n = 1500;
    const RealField q = harmonic_positions(0.4, 0.9, dt, n);
    const double s0 = action_of_path(path_from_positions(q, 0.0, dt, h), h);
    auto delta = [&](double eps) {
        RealField b = q;
        const double T = dt * static_cast<double>(n);
        for (std::size_t i = 0; i <= n; ++i) b[i] += eps * std::sin(std::numbers::pi * dt * static_cast<double>(i) / T);
        return action_of_path(path_from_positions(b, 0.0, dt, h), h) - s0;
    };
    const double d1 = delta(1e-2);
    const double d2 = delta(2e-2);
    CHECK(d1 > 0.0);
    CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(0.02));
    // Exact second variation for this bump: eps^2 (pi^2/T^2 - 1) T / 4.
    const double T = dt * static_cast<double>(n);
    CHECK(d1 == doctest::Approx(1e-4 * (std::numbers::pi * std::numbers::pi / (T * T) - 1.0) * T / 4.0).epsilon(0.02));
}

TEST_CASE("Lagrangian derivative") {
    const ClassicalSpec h = make_preset(Preset::harmonic);
    CHECK(lagrangian_dq(0.7, 3.0, h) == doctest::Approx(-0.7));
    PresetParams prm;
    prm.beta = 0.5;
    const ClassicalSpec vm = make_preset(Preset::variable_mass, prm);
    // L = q'^2 (1 + beta q^2) / 2 - V, so dL/dq = beta q q'^2 - V'.
    const double q = 0.6, v = 1.3;
    CHECK(lagrangian_dq(q, v, vm) == doctest::Approx(0.5 * q * v * v - vm.dV(q)).epsilon(1e-12));
}
