#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ergodrift/grid.hpp"
#include "ergodrift/quadrature.hpp"

namespace ergodrift {

class WaveletSystem;
struct WaveletCoefficients;

/// Drift given by a named formula and its parameters.
struct ClosedFormRepr {
    std::string id;
    std::vector<double> params;
};

/// Drift given by a finite wavelet expansion.
struct WaveletRepr {
    std::shared_ptr<const WaveletSystem> system;
    std::shared_ptr<const WaveletCoefficients> coefficients;
};

/// Drift given by node samples, evaluated by linear interpolation and held
/// constant outside the grid.
struct GridRepr {
    SpatialGrid grid;
    std::vector<double> values;
};

using DriftRepresentation = std::variant<ClosedFormRepr, WaveletRepr, GridRepr>;

/// A bounded continuous drift function b of dX = b(X) dt + dW.
///
/// Drifts are immutable values; copies share the evaluation closure. Two drifts
/// with equal fingerprint are treated as identical by the kernel caches.
class Drift {
public:
    using Eval = std::function<double(double)>;
    /// Exact \int_a^b b(x) dx.
    using Integral = std::function<double(double, double)>;

    Drift(Eval eval, double sup_bound, DriftRepresentation repr,
          double support_radius = std::numeric_limits<double>::infinity(),
          std::string label = {});

    double operator()(double x) const { return (*eval_)(x); }
    double eval(double x) const { return (*eval_)(x); }

    /// Certified bound on sup |b|; +inf for unbounded closed forms such as OU.
    double sup_bound() const noexcept { return sup_bound_; }
    /// Radius m beyond which the tail extension applies (inf for plain closed forms).
    double support_radius() const noexcept { return support_radius_; }
    const DriftRepresentation& representation() const noexcept { return repr_; }
    const std::string& label() const noexcept { return label_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    /// max |b| over the grid nodes and cell midpoints, capped by sup_bound().
    double sup_on(const SpatialGrid& grid) const;

    /// Copy carrying a closed-form segment integral (same fingerprint).
    Drift with_integral(Integral integral) const;
    bool has_exact_integral() const noexcept { return static_cast<bool>(integral_); }
    /// \int_a^b b, exact when available, adaptive Simpson otherwise.
    double integral(double a, double b, const QuadratureOptions& opts = {}) const;

private:
    std::shared_ptr<const Eval> eval_;
    std::shared_ptr<const Integral> integral_;
    double sup_bound_;
    DriftRepresentation repr_;
    double support_radius_;
    std::string label_;
    std::uint64_t fingerprint_;
};

namespace drifts {

Drift zero();
Drift constant(double value);
/// Ornstein-Uhlenbeck drift -theta (x - mean).
Drift ornstein_uhlenbeck(double theta = 1.0, double mean = 0.0);
/// -scale * tanh(x / width): bounded, confining.
Drift tanh_restoring(double scale, double width = 1.0);
/// -scale * tanh(x / width) + sum_k amp_k sin(freq_k x + phase_k).
Drift tanh_with_sines(double scale, double width, const std::vector<double>& amplitudes,
                      const std::vector<double>& frequencies, const std::vector<double>& phases);
/// Smoothed indicator of [center - half_width, center + half_width] with values in (0, 1).
double smoothed_indicator(double x, double center, double half_width, double sharpness);
/// base + amplitude * smoothed_indicator(x; center, half_width, sharpness).
Drift with_bump(const Drift& base, double amplitude, double center, double half_width,
                double sharpness = 4.0);
/// Linear interpolation of node samples.
Drift from_grid(const SpatialGrid& grid, std::vector<double> values, std::string label = {});

}  // namespace drifts

/// FNV-1a helpers used for fingerprints and config hashes.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL);
std::uint64_t fnv1a_string(const std::string& s, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace ergodrift
