#include "ergodrift/quadrature.hpp"

#include <cmath>
#include <limits>

#include "ergodrift/errors.hpp"

namespace ergodrift {
namespace {

struct Simpson {
    const std::function<double(double)>& f;
    int max_depth;

    double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) const {
        double m = 0.5 * (a + b);
        double lm = 0.5 * (a + m);
        double rm = 0.5 * (m + b);
        double flm = f(lm);
        double frm = f(rm);
        double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        double delta = left + right - whole;
        double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(left) + std::abs(right) + std::abs(whole));
        if (std::abs(delta) <= std::max(15.0 * tol, noise)) return left + right + delta / 15.0;
        if (depth >= max_depth) {
            throw NumericFailure("adaptive Simpson exceeded maximum depth");
        }
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
};

// Outer Simpson over exp(sign * 2 G(y)) where G(y) = \int_c^y g is carried
// along the recursion and extended by inner adaptive integrals.
struct NestedExp {
    const std::function<double(double, double)>& segment;
    double sign;
    double abs_tol;
    double rel_tol;
    int max_depth;

    double integrand(double G) const {
        double e = sign * 2.0 * G;
        return e > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(e);
    }

    double recurse(double a, double b, double Ga, double Gm, double Gb, double whole, double tol,
                   int depth) const {
        double m = 0.5 * (a + b);
        double lm = 0.5 * (a + m);
        double rm = 0.5 * (m + b);
        double Glm = Ga + segment(a, lm);
        double Grm = Gm + segment(m, rm);
        double fa = integrand(Ga), fm = integrand(Gm), fb = integrand(Gb);
        double flm = integrand(Glm), frm = integrand(Grm);
        double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        double sum = left + right;
        if (!std::isfinite(sum)) return std::numeric_limits<double>::infinity();
        double delta = sum - whole;
        double local_tol = std::max(tol, rel_tol * std::abs(sum));
        if (std::abs(delta) <= 15.0 * local_tol) return sum + delta / 15.0;
        if (depth >= max_depth) {
            throw NumericFailure("nested quadrature exceeded maximum depth");
        }
        return recurse(a, m, Ga, Glm, Gm, left, 0.5 * tol, depth + 1) +
               recurse(m, b, Gm, Grm, Gb, right, 0.5 * tol, depth + 1);
    }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, opts);
    Simpson s{f, opts.max_depth};
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double result = s.recurse(a, b, fa, fm, fb, whole, opts.abs_tol, 0);
    if (!std::isfinite(result)) throw NumericFailure("quadrature produced a non-finite value");
    return result;
}

double nested_exp_integral(const std::function<double(double)>& g, double c, double x, double sign,
                           const QuadratureOptions& opts) {
    QuadratureOptions inner{1e-10, opts.max_depth};
    std::function<double(double, double)> segment = [&](double a, double b) {
        return integrate(g, a, b, inner);
    };
    return nested_exp_integral_segments(segment, c, x, sign, opts);
}

double nested_exp_integral_segments(const std::function<double(double, double)>& segment, double c,
                                    double x, double sign, const QuadratureOptions& opts) {
    if (x == c) return 0.0;
    double lo = std::min(c, x), hi = std::max(c, x);
    // G is always measured from c.
    double G_lo = (lo == c) ? 0.0 : segment(c, lo);
    double G_hi = (hi == c) ? 0.0 : segment(c, hi);
    double mid = 0.5 * (lo + hi);
    double G_mid = segment(c, mid);
    NestedExp ne{segment, sign, opts.abs_tol, 1e-9, opts.max_depth};
    double whole = (hi - lo) / 6.0 *
                   (ne.integrand(G_lo) + 4.0 * ne.integrand(G_mid) + ne.integrand(G_hi));
    double value = std::isfinite(whole)
                       ? ne.recurse(lo, hi, G_lo, G_mid, G_hi, whole, opts.abs_tol, 0)
                       : std::numeric_limits<double>::infinity();
    return x >= c ? value : -value;
}

}  // namespace ergodrift
