#include "qaction/lattice.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qaction/errors.hpp"

namespace qaction {

GridSpec build_grid(std::size_t n, double q_min, double q_max) {
    if (n < GridSpec::kMinPoints) {
        throw ConfigError(fmt::format("grid needs at least {} points, got {}", GridSpec::kMinPoints, n));
    }
    if (!std::isfinite(q_min) || !std::isfinite(q_max) || !(q_max > q_min)) {
        throw ConfigError(fmt::format("degenerate grid bounds [{}, {}]", q_min, q_max));
    }
    const double dq = (q_max - q_min) / static_cast<double>(n - 1);
    return GridSpec(n, q_min, q_max, dq);
}

RealField GridSpec::points() const {
    RealField q(n_);
    for (std::size_t i = 0; i < n_; ++i) q[i] = point(i);
    return q;
}

void check_shape(std::span<const double> f, const GridSpec& grid) {
    if (f.size() != grid.n()) {
        throw ShapeError(fmt::format("field has {} entries, grid has {}", f.size(), grid.n()));
    }
}

void check_shape(std::span<const Complex> f, const GridSpec& grid) {
    if (f.size() != grid.n()) {
        throw ShapeError(fmt::format("field has {} entries, grid has {}", f.size(), grid.n()));
    }
}

void check_finite(std::span<const double> f, const char* what) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f[i])) {
            throw NumericalError(fmt::format("{}: non-finite entry at index {}", what, i));
        }
    }
}

RealField gradient(std::span<const double> f, const GridSpec& grid) {
    check_shape(f, grid);
    const std::size_t n = grid.n();
    const double inv2h = 0.5 / grid.dq();
    RealField d(n);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) * inv2h;
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
    return d;
}

RealField second_derivative(std::span<const double> f, const GridSpec& grid) {
    check_shape(f, grid);
    const std::size_t n = grid.n();
    const double inv_h2 = 1.0 / (grid.dq() * grid.dq());
    RealField d(n);
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv_h2;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv_h2;
    return d;
}

double integrate(std::span<const double> f, const GridSpec& grid) {
    check_shape(f, grid);
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += f[i];
    return sum * grid.dq();
}

double integrate_between(std::span<const double> f, const GridSpec& grid, double a, double b) {
    check_shape(f, grid);
    a = std::max(a, grid.q_min());
    b = std::min(b, grid.q_max());
    if (!(b > a)) return 0.0;

    const double h = grid.dq();
    const std::size_t last_cell = grid.n() - 2;
    auto cell_of = [&](double q) {
        const auto c = static_cast<std::size_t>(std::floor((q - grid.q_min()) / h));
        return std::min(c, last_cell);
    };
    // Integral of the linear interpolant over [x0, x1] inside one cell.
    auto piece = [&](std::size_t c, double x0, double x1) {
        const double left = grid.point(c);
        const double slope = (f[c + 1] - f[c]) / h;
        const double v0 = f[c] + slope * (x0 - left);
        const double v1 = f[c] + slope * (x1 - left);
        return 0.5 * (v0 + v1) * (x1 - x0);
    };

    const std::size_t ca = cell_of(a);
    const std::size_t cb = cell_of(b);
    if (ca == cb) return piece(ca, a, b);

    double sum = piece(ca, a, grid.point(ca + 1));
    for (std::size_t c = ca + 1; c < cb; ++c) sum += 0.5 * (f[c] + f[c + 1]) * h;
    sum += piece(cb, grid.point(cb), b);
    return sum;
}

double interpolate(std::span<const double> f, const GridSpec& grid, double q) {
    const double x = std::clamp((q - grid.q_min()) / grid.dq(), 0.0, static_cast<double>(grid.n() - 1));
    auto c = static_cast<std::size_t>(x);
    if (c >= grid.n() - 1) c = grid.n() - 2;
    const double w = x - static_cast<double>(c);
    return (1.0 - w) * f[c] + w * f[c + 1];
}

RealField abs2(std::span<const Complex> psi) {
    RealField out(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = std::norm(psi[i]);
    return out;
}

void require_node_free(std::span<const double> density, const char* what) {
    const auto [lo, hi] = std::minmax_element(density.begin(), density.end());
    if (!(*hi > 0.0) || *lo < kNodeThreshold * *hi) {
        throw NodeError(fmt::format("{}: density node at index {} (min {:.3e}, max {:.3e})", what,
                                    std::distance(density.begin(), lo), *lo, *hi));
    }
}

}  // namespace qaction
