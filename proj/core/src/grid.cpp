#include "ergodrift/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ergodrift/errors.hpp"

namespace ergodrift {

SpatialGrid::SpatialGrid(double lo, double hi, int n_points) : lo_(lo), hi_(hi), n_(n_points) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi)) {
        throw ValidationError("grid requires finite lo < hi");
    }
    if (n_points < 3 || n_points % 2 == 0) {
        throw ValidationError("grid requires an odd number of points >= 3, got " +
                              std::to_string(n_points));
    }
    h_ = (hi - lo) / (n_points - 1);
}

SpatialGrid SpatialGrid::symmetric(double radius, int n_points) {
    return SpatialGrid(-radius, radius, n_points);
}

SpatialGrid SpatialGrid::with_spacing(double radius, double max_spacing) {
    if (!(max_spacing > 0.0)) throw ValidationError("grid spacing must be positive");
    int cells = static_cast<int>(std::ceil(2.0 * radius / max_spacing - 1e-9));
    if (cells % 2 == 1) ++cells;
    cells = std::max(cells, 2);
    return symmetric(radius, cells + 1);
}

std::vector<double> SpatialGrid::nodes() const {
    std::vector<double> x(n_);
    for (int i = 0; i < n_; ++i) x[i] = node(i);
    return x;
}

SpatialGrid::Location SpatialGrid::locate(double x) const {
    if (!contains(x)) throw ValidationError("point outside grid");
    double pos = (x - lo_) / h_;
    int i = static_cast<int>(std::floor(pos));
    i = std::clamp(i, 0, n_ - 2);
    return {i, std::clamp(pos - i, 0.0, 1.0)};
}

}  // namespace ergodrift
