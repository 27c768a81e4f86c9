#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qaction/hamiltonian.hpp"
#include "qaction/lattice.hpp"

namespace qaction {

struct PhasePoint {
    double q = 0.0;
    double p = 0.0;  // canonical momentum
    double t = 0.0;
};

/// Phase points at uniform spacing dt, at least two of them.
class PathRecord {
public:
    // Throws ConfigError on fewer than two points, non-finite entries or
    // non-uniform spacing (relative tolerance 1e-9).
    explicit PathRecord(std::vector<PhasePoint> points);

    std::size_t size() const { return points_.size(); }
    double dt() const { return dt_; }
    const PhasePoint& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<PhasePoint>& points() const { return points_; }
    RealField positions() const;

private:
    std::vector<PhasePoint> points_;
    double dt_;
};

/**
 * Generalised Stoermer-Verlet step:
 *   p' = p - dt/2 dH/dq(q, p')               (implicit in p')
 *   q1 = q + dt/2 [dH/dp(q, p') + dH/dp(q1, p')]   (implicit in q1)
 *   p1 = p' - dt/2 dH/dq(q1, p')
 * Symplectic and time-reversible; reduces to leapfrog when H separates.
 * Fixed points are iterated to 1e-12; NumericalError after 50 iterations.
 */
PhasePoint hamilton_step(const PhasePoint& pt, const ClassicalSpec& spec, double dt);

PathRecord integrate_hamilton(const PhasePoint& start, const ClassicalSpec& spec, double dt, std::size_t steps);

/// Trapezoid sum of L = p q' - H with q' = dH/dp at each recorded point.
double action_of_path(const PathRecord& path, const ClassicalSpec& spec);

/// Path through the given positions with momenta p = q'/g + A, q' from
/// second-order differences (one-sided at the ends).
PathRecord path_from_positions(std::span<const double> q, double t0, double dt, const ClassicalSpec& spec);

/**
 * Discrete Euler-Lagrange residual at interior points i = 1..n-2:
 *   (p_{i+1/2} - p_{i-1/2}) / dt - dL/dq(q_i, q'_i)
 * with p_{i+1/2} = v/g + A at the midpoint of the segment, v its chord
 * velocity, and q'_i the centred velocity. Uses positions only.
 */
RealField euler_lagrange_residual(const PathRecord& path, const ClassicalSpec& spec);

/// dL/dq = -q'^2 g'/(2 g^2) + A' q' - V'
double lagrangian_dq(double q, double qdot, const ClassicalSpec& spec);

}  // namespace qaction
