#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qaction {

using Complex = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<Complex>;

/**
 * Uniform 1-D lattice q_i = q_min + i*dq, i = 0..n-1.
 *
 * Construct through build_grid(); the spacing is fixed at construction so
 * every consumer sees the same dq.
 */
class GridSpec {
public:
    static constexpr std::size_t kMinPoints = 16;

    std::size_t n() const { return n_; }
    double q_min() const { return q_min_; }
    double q_max() const { return q_max_; }
    double dq() const { return dq_; }

    double point(std::size_t i) const { return q_min_ + static_cast<double>(i) * dq_; }
    RealField points() const;

    // Index used for global-phase pinning and polar-branch selection.
    std::size_t mid_index() const { return (n_ - 1) / 2; }

    bool contains(double q) const { return q >= q_min_ && q <= q_max_; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    friend GridSpec build_grid(std::size_t n, double q_min, double q_max);
    GridSpec(std::size_t n, double q_min, double q_max, double dq)
        : n_(n), q_min_(q_min), q_max_(q_max), dq_(dq) {}

    std::size_t n_;
    double q_min_;
    double q_max_;
    double dq_;
};

// Throws ConfigError for n < 16 or q_max <= q_min.
GridSpec build_grid(std::size_t n, double q_min, double q_max);

// Throws ShapeError when the field length differs from grid.n().
void check_shape(std::span<const double> f, const GridSpec& grid);
void check_shape(std::span<const Complex> f, const GridSpec& grid);

// Throws NumericalError on the first NaN/Inf entry.
void check_finite(std::span<const double> f, const char* what);

// Samples f at every grid point.
template <typename F>
RealField sample(const GridSpec& grid, F&& f) {
    RealField out(grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i) out[i] = f(grid.point(i));
    return out;
}

/// Central differences inside, second-order one-sided stencils at both ends.
RealField gradient(std::span<const double> f, const GridSpec& grid);

/// Three-point second difference inside, second-order one-sided at both ends.
RealField second_derivative(std::span<const double> f, const GridSpec& grid);

/// Trapezoidal rule over [q_min, q_max].
double integrate(std::span<const double> f, const GridSpec& grid);

/// Exact integral of the piecewise-linear interpolant of f over [a, b],
/// clipped to the grid domain.
double integrate_between(std::span<const double> f, const GridSpec& grid, double a, double b);

/// Piecewise-linear interpolation; q is clamped to the domain.
double interpolate(std::span<const double> f, const GridSpec& grid, double q);

RealField abs2(std::span<const Complex> psi);

// Operations that divide by a density reject min(density) below this
// fraction of max(density).
inline constexpr double kNodeThreshold = 1e-12;

// Throws NodeError when density has a node in the above sense.
void require_node_free(std::span<const double> density, const char* what);

}  // namespace qaction
