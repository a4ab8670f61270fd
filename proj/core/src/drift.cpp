#include "ergodrift/drift.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ergodrift/errors.hpp"
#include "ergodrift/wavelet.hpp"

namespace ergodrift {

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a_string(const std::string& s, std::uint64_t seed) {
    return fnv1a(s.data(), s.size(), seed);
}

namespace {

std::uint64_t hash_doubles(const std::vector<double>& v, std::uint64_t seed) {
    return v.empty() ? seed : fnv1a(v.data(), v.size() * sizeof(double), seed);
}

std::uint64_t representation_fingerprint(const DriftRepresentation& repr) {
    struct Visitor {
        std::uint64_t operator()(const ClosedFormRepr& r) const {
            return hash_doubles(r.params, fnv1a_string("closed:" + r.id));
        }
        std::uint64_t operator()(const WaveletRepr& r) const {
            std::uint64_t h = fnv1a_string(std::string("wavelet:") + to_string(r.system->family()));
            int depth = r.system->cascade_depth();
            h = fnv1a(&depth, sizeof depth, h);
            std::uint64_t c = r.coefficients->fingerprint();
            return fnv1a(&c, sizeof c, h);
        }
        std::uint64_t operator()(const GridRepr& r) const {
            double g[3] = {r.grid.lo(), r.grid.hi(), static_cast<double>(r.grid.size())};
            std::uint64_t h = fnv1a(g, sizeof g, fnv1a_string("grid"));
            return hash_doubles(r.values, h);
        }
    };
    return std::visit(Visitor{}, repr);
}

}  // namespace

Drift::Drift(Eval eval, double sup_bound, DriftRepresentation repr, double support_radius,
             std::string label)
    : eval_(std::make_shared<const Eval>(std::move(eval))),
      sup_bound_(sup_bound),
      repr_(std::move(repr)),
      support_radius_(support_radius),
      label_(std::move(label)) {
    if (!(sup_bound >= 0.0)) throw ValidationError("drift sup_bound must be >= 0");
    if (!(support_radius > 0.0)) throw ValidationError("drift support_radius must be > 0");
    std::uint64_t h = representation_fingerprint(repr_);
    fingerprint_ = fnv1a(&support_radius_, sizeof support_radius_, h);
}

double Drift::sup_on(const SpatialGrid& grid) const {
    double m = 0.0;
    double h = grid.spacing();
    for (int i = 0; i < grid.size(); ++i) {
        double x = grid.node(i);
        m = std::max(m, std::abs(eval(x)));
        if (i + 1 < grid.size()) m = std::max(m, std::abs(eval(x + 0.5 * h)));
    }
    return std::min(m, sup_bound_);
}

Drift Drift::with_integral(Integral integral) const {
    Drift copy = *this;
    copy.integral_ = std::make_shared<const Integral>(std::move(integral));
    return copy;
}

double Drift::integral(double a, double b, const QuadratureOptions& opts) const {
    if (integral_) return (*integral_)(a, b);
    return integrate(*eval_, a, b, opts);
}

namespace {

double log_cosh(double y) {
    double a = std::abs(y);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

namespace drifts {

Drift zero() {
    return Drift([](double) { return 0.0; }, 0.0, ClosedFormRepr{"zero", {}},
                 std::numeric_limits<double>::infinity(), "zero")
        .with_integral([](double, double) { return 0.0; });
}

Drift constant(double value) {
    return Drift([value](double) { return value; }, std::abs(value),
                 ClosedFormRepr{"constant", {value}}, std::numeric_limits<double>::infinity(),
                 "constant")
        .with_integral([value](double a, double b) { return value * (b - a); });
}

Drift ornstein_uhlenbeck(double theta, double mean) {
    return Drift([theta, mean](double x) { return -theta * (x - mean); },
                 theta == 0.0 ? 0.0 : std::numeric_limits<double>::infinity(),
                 ClosedFormRepr{"ou", {theta, mean}}, std::numeric_limits<double>::infinity(), "ou")
        .with_integral([theta, mean](double a, double b) {
            return -theta * (b - a) * (0.5 * (a + b) - mean);
        });
}

Drift tanh_restoring(double scale, double width) {
    if (!(width > 0.0)) throw ValidationError("tanh drift width must be positive");
    return Drift([scale, width](double x) { return -scale * std::tanh(x / width); },
                 std::abs(scale), ClosedFormRepr{"tanh", {scale, width}},
                 std::numeric_limits<double>::infinity(), "tanh")
        .with_integral([scale, width](double a, double b) {
            return -scale * width * (log_cosh(b / width) - log_cosh(a / width));
        });
}

Drift tanh_with_sines(double scale, double width, const std::vector<double>& amplitudes,
                      const std::vector<double>& frequencies, const std::vector<double>& phases) {
    if (amplitudes.size() != frequencies.size() || amplitudes.size() != phases.size()) {
        throw ValidationError("tanh_sines: amplitude/frequency/phase lengths differ");
    }
    if (!(width > 0.0)) throw ValidationError("tanh_sines width must be positive");
    double bound = std::abs(scale);
    std::vector<double> params{scale, width};
    for (std::size_t k = 0; k < amplitudes.size(); ++k) {
        bound += std::abs(amplitudes[k]);
        params.insert(params.end(), {amplitudes[k], frequencies[k], phases[k]});
    }
    auto eval = [scale, width, amplitudes, frequencies, phases](double x) {
        double v = -scale * std::tanh(x / width);
        for (std::size_t k = 0; k < amplitudes.size(); ++k) {
            v += amplitudes[k] * std::sin(frequencies[k] * x + phases[k]);
        }
        return v;
    };
    auto integral = [scale, width, amplitudes, frequencies, phases](double a, double b) {
        double v = -scale * width * (log_cosh(b / width) - log_cosh(a / width));
        for (std::size_t k = 0; k < amplitudes.size(); ++k) {
            double w = frequencies[k];
            if (w == 0.0) {
                v += amplitudes[k] * std::sin(phases[k]) * (b - a);
            } else {
                v -= amplitudes[k] / w * (std::cos(w * b + phases[k]) - std::cos(w * a + phases[k]));
            }
        }
        return v;
    };
    return Drift(eval, bound, ClosedFormRepr{"tanh_sines", params},
                 std::numeric_limits<double>::infinity(), "tanh_sines")
        .with_integral(integral);
}

double smoothed_indicator(double x, double center, double half_width, double sharpness) {
    return 0.5 * (std::tanh(sharpness * (x - center + half_width)) -
                  std::tanh(sharpness * (x - center - half_width)));
}

Drift with_bump(const Drift& base, double amplitude, double center, double half_width,
                double sharpness) {
    std::vector<double> params{amplitude, center, half_width, sharpness,
                               static_cast<double>(base.fingerprint() >> 11)};
    auto eval = [base, amplitude, center, half_width, sharpness](double x) {
        return base(x) + amplitude * smoothed_indicator(x, center, half_width, sharpness);
    };
    Drift out(eval, base.sup_bound() + std::abs(amplitude), ClosedFormRepr{"bump", params},
              base.support_radius(), base.label() + "+bump");
    if (!base.has_exact_integral() || !(sharpness > 0.0)) return out;
    return out.with_integral([base, amplitude, center, half_width, sharpness](double a, double b) {
        auto prim = [&](double x) {
            return (log_cosh(sharpness * (x - center + half_width)) -
                    log_cosh(sharpness * (x - center - half_width))) /
                   (2.0 * sharpness);
        };
        return base.integral(a, b) + amplitude * (prim(b) - prim(a));
    });
}

Drift from_grid(const SpatialGrid& grid, std::vector<double> values, std::string label) {
    if (static_cast<int>(values.size()) != grid.size()) {
        throw ValidationError("grid drift: value count does not match grid");
    }
    double bound = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("grid drift: non-finite value");
        bound = std::max(bound, std::abs(v));
    }
    auto shared = std::make_shared<const std::vector<double>>(values);
    auto eval = [grid, shared](double x) {
        const auto& v = *shared;
        if (x <= grid.lo()) return v.front();
        if (x >= grid.hi()) return v.back();
        auto loc = grid.locate(x);
        return v[loc.index] + loc.fraction * (v[loc.index + 1] - v[loc.index]);
    };
    std::vector<double> cumulative(values.size(), 0.0);
    for (std::size_t i = 1; i < values.size(); ++i) {
        cumulative[i] = cumulative[i - 1] + 0.5 * grid.spacing() * (values[i - 1] + values[i]);
    }
    auto table = std::make_shared<const std::vector<double>>(std::move(cumulative));
    auto prim = [grid, shared, table, eval](double x) {
        const auto& v = *shared;
        if (x <= grid.lo()) return (x - grid.lo()) * v.front();
        if (x >= grid.hi()) return table->back() + (x - grid.hi()) * v.back();
        auto loc = grid.locate(x);
        double dx = loc.fraction * grid.spacing();
        return (*table)[loc.index] + 0.5 * dx * (v[loc.index] + eval(x));
    };
    return Drift(eval, bound, GridRepr{grid, std::move(values)},
                 std::numeric_limits<double>::infinity(), std::move(label))
        .with_integral([prim](double a, double b) { return prim(b) - prim(a); });
}

}  // namespace drifts
}  // namespace ergodrift
