#pragma once

#include <cstddef>
#include <vector>

namespace ergodrift {

/// Uniform grid on [lo, hi] with an odd number of nodes.
class SpatialGrid {
public:
    SpatialGrid(double lo, double hi, int n_points);

    /// Grid on [-radius, radius]; 0 is the middle node.
    static SpatialGrid symmetric(double radius, int n_points);

    /// Symmetric grid whose spacing does not exceed `max_spacing`.
    static SpatialGrid with_spacing(double radius, double max_spacing);

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    int size() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    double node(int i) const noexcept { return lo_ + h_ * i; }
    std::vector<double> nodes() const;

    bool contains(double x) const noexcept { return x >= lo_ && x <= hi_; }

    /// Cell [node(index), node(index+1)] containing x and the fractional
    /// position within it. x must lie inside the grid.
    struct Location {
        int index;
        double fraction;
    };
    Location locate(double x) const;

    bool operator==(const SpatialGrid& other) const noexcept {
        return lo_ == other.lo_ && hi_ == other.hi_ && n_ == other.n_;
    }

private:
    double lo_;
    double hi_;
    int n_;
    double h_;
};

/// Grid function: one value per node.
using GridFunction = std::vector<double>;

}  // namespace ergodrift
