#include "qaction/classical.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qaction/errors.hpp"

namespace qaction {

namespace {

constexpr double kFixedPointTol = 1e-12;
constexpr int kMaxIterations = 50;

template <class F>
double fixed_point(double x, F&& f, const char* what) {
    for (int it = 0; it < kMaxIterations; ++it) {
        const double next = f(x);
        if (!std::isfinite(next)) throw NumericalError(fmt::format("hamilton_step: {} iteration diverged", what));
        if (std::abs(next - x) <= kFixedPointTol * std::max(1.0, std::abs(next))) return next;
        x = next;
    }
    throw NumericalError(fmt::format("hamilton_step: {} fixed point did not converge in {} iterations", what,
                                     kMaxIterations));
}

}  // namespace

PathRecord::PathRecord(std::vector<PhasePoint> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw ConfigError("a path needs at least two points");
    dt_ = points_[1].t - points_[0].t;
    if (!(dt_ > 0.0)) throw ConfigError("path times must increase");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& pt = points_[i];
        if (!std::isfinite(pt.q) || !std::isfinite(pt.p) || !std::isfinite(pt.t)) {
            throw ConfigError(fmt::format("path point {} is not finite", i));
        }
        if (i > 0 && std::abs((pt.t - points_[i - 1].t) - dt_) > 1e-9 * dt_ * static_cast<double>(i + 1)) {
            throw ConfigError(fmt::format("path spacing is not uniform at point {}", i));
        }
    }
}

RealField PathRecord::positions() const {
    RealField q(points_.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = points_[i].q;
    return q;
}

PhasePoint hamilton_step(const PhasePoint& pt, const ClassicalSpec& spec, double dt) {
    if (!(dt > 0.0)) throw ConfigError(fmt::format("hamilton_step: dt must be positive, got {}", dt));
    const double h = 0.5 * dt;
    const double p_half = fixed_point(pt.p, [&](double p) { return pt.p - h * spec.dH_dq(pt.q, p); }, "momentum");
    const double v0 = spec.dH_dp(pt.q, p_half);
    const double q1 = fixed_point(pt.q + dt * v0, [&](double q) { return pt.q + h * (v0 + spec.dH_dp(q, p_half)); },
                                  "position");
    const double p1 = p_half - h * spec.dH_dq(q1, p_half);
    return {q1, p1, pt.t + dt};
}

PathRecord integrate_hamilton(const PhasePoint& start, const ClassicalSpec& spec, double dt, std::size_t steps) {
    std::vector<PhasePoint> pts;
    pts.reserve(steps + 1);
    pts.push_back(start);
    for (std::size_t s = 0; s < steps; ++s) {
        PhasePoint next = hamilton_step(pts.back(), spec, dt);
        next.t = start.t + static_cast<double>(s + 1) * dt;
        pts.push_back(next);
    }
    return PathRecord(std::move(pts));
}

double action_of_path(const PathRecord& path, const ClassicalSpec& spec) {
    auto lagrangian = [&](const PhasePoint& pt) {
        return pt.p * spec.dH_dp(pt.q, pt.p) - spec.hamiltonian(pt.q, pt.p);
    };
    double sum = 0.5 * (lagrangian(path[0]) + lagrangian(path[path.size() - 1]));
    for (std::size_t i = 1; i + 1 < path.size(); ++i) sum += lagrangian(path[i]);
    return sum * path.dt();
}

PathRecord path_from_positions(std::span<const double> q, double t0, double dt, const ClassicalSpec& spec) {
    const std::size_t n = q.size();
    if (n < 3) throw ConfigError("path_from_positions needs at least three positions");
    if (!(dt > 0.0)) throw ConfigError("path_from_positions: dt must be positive");
    std::vector<PhasePoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v;
        if (i == 0) {
            v = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * dt);
        } else if (i == n - 1) {
            v = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * dt);
        } else {
            v = (q[i + 1] - q[i - 1]) / (2.0 * dt);
        }
        pts[i] = {q[i], v / spec.g(q[i]) + spec.A(q[i]), t0 + static_cast<double>(i) * dt};
    }
    return PathRecord(std::move(pts));
}

double lagrangian_dq(double q, double qdot, const ClassicalSpec& spec) {
    const double g = spec.g(q);
    return -qdot * qdot * spec.dg(q) / (2.0 * g * g) + spec.dA(q) * qdot - spec.dV(q);
}

RealField euler_lagrange_residual(const PathRecord& path, const ClassicalSpec& spec) {
    const std::size_t n = path.size();
    if (n < 3) throw ConfigError("euler_lagrange_residual needs at least three points");
    const double dt = path.dt();
    auto mid_momentum = [&](std::size_t i) {
        const double qm = 0.5 * (path[i].q + path[i + 1].q);
        const double v = (path[i + 1].q - path[i].q) / dt;
        return v / spec.g(qm) + spec.A(qm);
    };
    RealField r(n - 2);
    double p_left = mid_momentum(0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double p_right = mid_momentum(i);
        const double qdot = (path[i + 1].q - path[i - 1].q) / (2.0 * dt);
        r[i - 1] = (p_right - p_left) / dt - lagrangian_dq(path[i].q, qdot, spec);
        p_left = p_right;
    }
    return r;
}

}  // namespace qaction
