#include "ergodrift/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ergodrift/errors.hpp"

namespace ergodrift {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double trapezoid(const std::vector<double>& v, double h) {
    double s = 0.0;
    for (double x : v) s += x;
    return h * (s - 0.5 * (v.front() + v.back()));
}

}  // namespace

InvariantDensity InvariantDensity::from_log_values(const SpatialGrid& grid,
                                                   std::vector<double> log_values) {
    if (static_cast<int>(log_values.size()) != grid.size()) {
        throw ValidationError("invariant density: value count does not match grid");
    }
    double top = -kInf;
    for (double l : log_values) {
        if (std::isnan(l) || l == kInf) throw DomainError("invariant density: invalid log value");
        top = std::max(top, l);
    }
    if (!std::isfinite(top)) throw DomainError("invariant density: all values are zero");
    std::vector<double> values(log_values.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::exp(log_values[i] - top);
    double mass = trapezoid(values, grid.spacing());
    double log_mass = std::log(mass);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] /= mass;
        log_values[i] -= top + log_mass;
    }
    return InvariantDensity(grid, std::move(values), std::move(log_values));
}

InvariantDensity InvariantDensity::from_values(const SpatialGrid& grid, std::vector<double> values) {
    std::vector<double> logs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
            throw DomainError("invariant density: values must be finite and nonnegative");
        }
        logs[i] = values[i] > 0.0 ? std::log(values[i]) : -kInf;
    }
    return from_log_values(grid, std::move(logs));
}

double InvariantDensity::at(double x) const {
    if (!grid_.contains(x)) return 0.0;
    auto loc = grid_.locate(x);
    return values_[loc.index] + loc.fraction * (values_[loc.index + 1] - values_[loc.index]);
}

std::vector<double> InvariantDensity::cell_masses() const {
    double total = std::accumulate(values_.begin(), values_.end(), 0.0);
    std::vector<double> p(values_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = values_[i] / total;
    return p;
}

double InvariantDensity::trapezoid_mass() const { return trapezoid(values_, grid_.spacing()); }

double InvariantDensity::probability(double a, double b) const {
    if (a > b) std::swap(a, b);
    a = std::max(a, grid_.lo());
    b = std::min(b, grid_.hi());
    if (a >= b) return 0.0;
    double h = grid_.spacing();
    // Integral of the piecewise-linear density from lo to x.
    auto cumulative = [&](double x) {
        auto loc = grid_.locate(x);
        double s = 0.0;
        for (int i = 0; i < loc.index; ++i) s += 0.5 * h * (values_[i] + values_[i + 1]);
        double t = loc.fraction;
        double v0 = values_[loc.index], v1 = values_[loc.index + 1];
        return s + h * (v0 * t + 0.5 * (v1 - v0) * t * t);
    };
    return std::clamp(cumulative(b) - cumulative(a), 0.0, 1.0);
}

const char* to_string(ErgodicityVerdict v) {
    switch (v) {
        case ErgodicityVerdict::ergodic_evidence: return "ergodic-evidence";
        case ErgodicityVerdict::inconclusive: return "inconclusive";
        case ErgodicityVerdict::violated: return "violated";
    }
    return "unknown";
}

double scale_function(const Drift& b, double c, double x, const QuadratureOptions& opts) {
    std::function<double(double, double)> seg = [&](double p, double q) { return b.integral(p, q); };
    return nested_exp_integral_segments(seg, c, x, -1.0, opts);
}

double log_speed_density(const Drift& b, double x, const QuadratureOptions& opts) {
    return 2.0 * b.integral(0.0, x, opts);
}

double speed_density(const Drift& b, double x, const QuadratureOptions& opts) {
    return std::exp(log_speed_density(b, x, opts));
}

std::vector<double> cell_integrals(const Drift& b, const SpatialGrid& grid,
                                   const QuadratureOptions& opts) {
    std::vector<double> out(grid.size() - 1);
    for (int i = 0; i + 1 < grid.size(); ++i) out[i] = b.integral(grid.node(i), grid.node(i + 1), opts);
    return out;
}

std::vector<double> log_speed_profile(const std::vector<double>& cells) {
    std::vector<double> out(cells.size() + 1, 0.0);
    for (std::size_t i = 0; i < cells.size(); ++i) out[i + 1] = out[i] + 2.0 * cells[i];
    return out;
}

InvariantDensity invariant_density(const Drift& b, const SpatialGrid& grid, double max_tail_mass) {
    auto pi = InvariantDensity::from_log_values(grid, log_speed_profile(cell_integrals(b, grid)));
    double b_lo = b(grid.lo());
    double b_hi = b(grid.hi());
    auto fail = [&](const std::string& why) {
        double radius = suggest_truncation(b);
        throw CoverageError("grid [" + std::to_string(grid.lo()) + ", " + std::to_string(grid.hi()) +
                                "] does not cover the invariant law: " + why,
                            radius);
    };
    if (!(b_lo > 0.0) || !(b_hi < 0.0)) fail("drift does not point inward at the grid edges");
    // Beyond the edge the density decays at least like exp(-2|b(edge)| dist)
    // when the drift keeps pointing inward with no smaller magnitude.
    double tail = pi.values().front() / (2.0 * b_lo) + pi.values().back() / (2.0 * -b_hi);
    if (!(tail <= max_tail_mass)) fail("estimated tail mass " + std::to_string(tail));
    return pi;
}

Drift drift_from_density(const InvariantDensity& pi) {
    const auto& v = pi.values();
    const auto& l = pi.log_values();
    for (double x : v) {
        if (!(x > 0.0)) throw DomainError("drift_from_density: density must be strictly positive");
    }
    const auto& g = pi.grid();
    int n = g.size();
    double h = g.spacing();
    std::vector<double> b(n);
    for (int i = 1; i + 1 < n; ++i) b[i] = (l[i + 1] - l[i - 1]) / (4.0 * h);
    b[0] = (l[1] - l[0]) / (2.0 * h);
    b[n - 1] = (l[n - 1] - l[n - 2]) / (2.0 * h);
    return drifts::from_grid(g, std::move(b), "from_density");
}

ErgodicityReport check_ergodicity(const Drift& b, const std::vector<double>& radii) {
    if (radii.size() < 2) throw ValidationError("check_ergodicity needs at least two radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
            throw ValidationError("check_ergodicity radii must be positive and increasing");
        }
    }
    ErgodicityReport r;
    r.radii = radii;
    std::function<double(double, double)> seg = [&](double p, double q) { return b.integral(p, q); };
    bool failed = false;
    // Integrals over [0, +-M_k] accumulated segment by segment:
    // \int_a^x exp(sign 2 G) = exp(sign 2 G(a)) \int_a^x exp(sign 2 (G - G(a))).
    struct Side {
        double end = 0.0, G = 0.0, scale = 0.0, mass = 0.0;
    };
    auto advance = [&](Side& s, double to) {
        auto piece = [&](double sign) {
            double v = nested_exp_integral_segments(seg, s.end, to, sign);
            if (v == 0.0) return 0.0;
            double l = sign * 2.0 * s.G + std::log(std::abs(v));
            return std::copysign(l > 709.0 ? kInf : std::exp(l), v);
        };
        s.scale += piece(-1.0);
        s.mass += piece(1.0);
        s.G += b.integral(s.end, to);
        s.end = to;
    };
    Side left, right;
    for (double M : radii) {
        if (!failed) {
            try {
                advance(right, M);
                advance(left, -M);
            } catch (const NumericFailure&) {
                failed = true;
            }
        }
        if (failed) {
            r.scale_left.push_back(kInf);
            r.scale_right.push_back(kInf);
            r.speed_masses.push_back(kInf);
            continue;
        }
        r.scale_left.push_back(left.scale);
        r.scale_right.push_back(right.scale);
        r.speed_masses.push_back(right.mass - left.mass);
    }
    r.speed_mass = r.speed_masses.back();
    if (failed) {
        r.verdict = ErgodicityVerdict::inconclusive;
        return r;
    }
    std::size_t k = radii.size() - 1;
    double m_prev = r.speed_masses[k - 1], m_last = r.speed_masses[k];
    if (!std::isfinite(m_last)) {
        r.verdict = ErgodicityVerdict::violated;
        return r;
    }
    double mass_change = std::abs(m_last - m_prev) / m_last;
    auto rel_increment = [](double prev, double last) {
        if (!std::isfinite(last)) return kInf;
        return std::abs(last - prev) / std::abs(last);
    };
    double grow_left = rel_increment(r.scale_left[k - 1], r.scale_left[k]);
    double grow_right = rel_increment(r.scale_right[k - 1], r.scale_right[k]);
    if (mass_change > 0.1 || grow_left < 1e-6 || grow_right < 1e-6) {
        r.verdict = ErgodicityVerdict::violated;
        return r;
    }
    bool monotone = true;
    for (std::size_t i = 1; i < radii.size(); ++i) {
        monotone = monotone && std::abs(r.scale_left[i]) > std::abs(r.scale_left[i - 1]) &&
                   std::abs(r.scale_right[i]) > std::abs(r.scale_right[i - 1]);
    }
    r.verdict = (monotone && mass_change < 1e-6) ? ErgodicityVerdict::ergodic_evidence
                                                 : ErgodicityVerdict::inconclusive;
    return r;
}

double suggest_truncation(const Drift& b, double relative_floor, double step, double max_radius) {
    if (!(relative_floor > 0.0 && relative_floor < 1.0) || !(step > 0.0)) {
        throw ValidationError("suggest_truncation: bad parameters");
    }
    double log_floor = std::log(relative_floor);
    double left = 0.0, right = 0.0, top = 0.0;
    for (double r = step; r <= max_radius + 1e-12; r += step) {
        right += 2.0 * b.integral(r - step, r);
        left += 2.0 * b.integral(-(r - step), -r);
        top = std::max({top, left, right});
        if (left - top < log_floor && right - top < log_floor) return r;
    }
    return kInf;
}

}  // namespace ergodrift
