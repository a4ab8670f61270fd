#pragma once

#include <vector>

#include "ergodrift/drift.hpp"
#include "ergodrift/grid.hpp"
#include "ergodrift/quadrature.hpp"

namespace ergodrift {

/// Normalized invariant density pi_b = m_b / m_b(R) sampled at grid nodes.
class InvariantDensity {
public:
    /// From unnormalized log-density values at the nodes; normalizes so that the
    /// trapezoid integral equals one.
    static InvariantDensity from_log_values(const SpatialGrid& grid, std::vector<double> log_values);
    /// From nonnegative density values (normalized on construction).
    static InvariantDensity from_values(const SpatialGrid& grid, std::vector<double> values);

    const SpatialGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    /// Natural log of values(); -inf where the value is zero.
    const std::vector<double>& log_values() const noexcept { return log_values_; }

    /// Density at x by linear interpolation; 0 outside the grid.
    double at(double x) const;
    /// Probability vector over nodes, proportional to values() (sums to 1).
    std::vector<double> cell_masses() const;
    /// Trapezoid integral of the stored values.
    double trapezoid_mass() const;
    /// Probability of [a, b] under the piecewise-linear density.
    double probability(double a, double b) const;

private:
    InvariantDensity(SpatialGrid grid, std::vector<double> values, std::vector<double> log_values)
        : grid_(grid), values_(std::move(values)), log_values_(std::move(log_values)) {}

    SpatialGrid grid_;
    std::vector<double> values_;
    std::vector<double> log_values_;
};

enum class ErgodicityVerdict { ergodic_evidence, inconclusive, violated };

const char* to_string(ErgodicityVerdict v);

struct ErgodicityReport {
    std::vector<double> radii;
    std::vector<double> scale_left;   ///< s_b(-M) for each radius M
    std::vector<double> scale_right;  ///< s_b(+M)
    std::vector<double> speed_masses; ///< m_b([-M, M])
    double speed_mass = 0.0;          ///< value at the largest radius
    ErgodicityVerdict verdict = ErgodicityVerdict::inconclusive;
};

/// s_b(x) = \int_c^x exp(-2 \int_c^y b) dy.
double scale_function(const Drift& b, double c, double x, const QuadratureOptions& opts = {});

/// 2 \int_0^x b, the log of the speed density.
double log_speed_density(const Drift& b, double x, const QuadratureOptions& opts = {});
/// exp(2 \int_0^x b); +inf on overflow.
double speed_density(const Drift& b, double x, const QuadratureOptions& opts = {});

/// Integrals of b over each grid cell [x_i, x_{i+1}] (size n-1). Shared by the
/// invariant density and the generator discretization so that the discrete
/// chain's invariant law matches invariant_density() node for node.
std::vector<double> cell_integrals(const Drift& b, const SpatialGrid& grid,
                                   const QuadratureOptions& opts = {});

/// 2 \int_{lo}^{x_i} b at every node, from cell_integrals().
std::vector<double> log_speed_profile(const std::vector<double>& cell_integrals);

/// Invariant density on the grid. Throws CoverageError when the estimated mass
/// outside the grid exceeds `max_tail_mass` or the drift does not point inward
/// at the grid edges.
InvariantDensity invariant_density(const Drift& b, const SpatialGrid& grid,
                                   double max_tail_mass = 1e-6);

/// b = pi' / (2 pi): centered differences of log pi inside, one-sided at the ends.
Drift drift_from_density(const InvariantDensity& pi);

ErgodicityReport check_ergodicity(const Drift& b, const std::vector<double>& radii);

/// Smallest radius M such that the unnormalized speed density at +-M is below
/// `relative_floor` times its maximum. Searches outward in steps of `step`.
double suggest_truncation(const Drift& b, double relative_floor = 1e-12, double step = 0.25,
                          double max_radius = 400.0);

}  // namespace ergodrift
