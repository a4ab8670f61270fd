#pragma once

#include <functional>

namespace ergodrift {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    int max_depth = 40;
};

/// Adaptive Simpson quadrature of f over [a, b] (a > b allowed, sign flips).
/// Throws NumericFailure when max_depth is reached without meeting abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

/// Computes \int_c^x exp(sign * 2 \int_c^y g(z) dz) dy. The inner integrals are
/// accumulated incrementally along the outer subdivision so that each inner
/// piece is itself an adaptive Simpson integral. Returns +inf on overflow.
double nested_exp_integral(const std::function<double(double)>& g, double c, double x,
                           double sign, const QuadratureOptions& opts = {});

/// As above with the inner integrals supplied by `segment(a, b)` = \int_a^b g.
double nested_exp_integral_segments(const std::function<double(double, double)>& segment, double c,
                                    double x, double sign, const QuadratureOptions& opts = {});

}  // namespace ergodrift
