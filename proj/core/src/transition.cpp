#include "ergodrift/transition.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/errors.hpp"

namespace ergodrift {

Eigen::MatrixXd GeneratorMatrix::dense() const {
    int n = grid_.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = diagonal_[i];
    for (int i = 0; i + 1 < n; ++i) {
        a(i, i + 1) = upper_[i];
        a(i + 1, i) = lower_[i];
    }
    return a;
}

GridFunction GeneratorMatrix::apply(const GridFunction& f) const {
    int n = grid_.size();
    if (static_cast<int>(f.size()) != n) throw ValidationError("generator apply: size mismatch");
    GridFunction out(n);
    for (int i = 0; i < n; ++i) {
        double v = diagonal_[i] * f[i];
        if (i + 1 < n) v += upper_[i] * f[i + 1];
        if (i > 0) v += lower_[i - 1] * f[i - 1];
        out[i] = v;
    }
    return out;
}

GeneratorMatrix discretize_generator(const Drift& b, const SpatialGrid& grid) {
    double h = grid.spacing();
    double sup = b.sup_on(grid);
    if (!(h * sup < 1.0)) {
        int cells = static_cast<int>(std::ceil((grid.hi() - grid.lo()) * sup * 1.25)) + 1;
        if (cells % 2 == 1) ++cells;
        throw GridTooCoarse("grid too coarse for drift: h * sup|b| = " + std::to_string(h * sup),
                            cells + 1);
    }
    auto phi = cell_integrals(b, grid);
    int n = grid.size();
    GeneratorMatrix g(grid);
    double rate = 1.0 / (2.0 * h * h);
    g.upper_.resize(n - 1);
    g.lower_.resize(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        g.upper_[i] = rate * std::exp(phi[i]);
        g.lower_[i] = rate * std::exp(-phi[i]);
    }
    g.diagonal_.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double out = 0.0;
        if (i + 1 < n) out += g.upper_[i];
        if (i > 0) out += g.lower_[i - 1];
        g.diagonal_[i] = -out;
    }
    g.log_weights_ = log_speed_profile(phi);
    return g;
}

TransitionKernel::TransitionKernel(SpatialGrid grid, double delta_t, Eigen::MatrixXd matrix)
    : grid_(grid), delta_t_(delta_t), matrix_(std::move(matrix)) {
    if (!(delta_t >= 0.0)) throw ValidationError("kernel delta_t must be >= 0");
    if (matrix_.rows() != grid.size() || matrix_.cols() != grid.size()) {
        throw ValidationError("kernel matrix does not match grid size");
    }
}

namespace {

// Raises dust below the floor and renormalizes rows.
void clean_rows(Eigen::MatrixXd& k) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            double& v = k(i, j);
            if (!std::isfinite(v)) throw NumericFailure("kernel contains a non-finite entry");
            if (v < kKernelFloor) v = kKernelFloor;
            s += v;
        }
        k.row(i) /= s;
    }
}

TransitionKernel identity_kernel(const SpatialGrid& grid) {
    return TransitionKernel(grid, 0.0, Eigen::MatrixXd::Identity(grid.size(), grid.size()));
}

}  // namespace

SemigroupSpectrum::SemigroupSpectrum(const GeneratorMatrix& generator) : grid_(generator.grid()) {
    int n = grid_.size();
    std::vector<double> d(generator.diagonal());
    // sqrt(up_i * down_{i+1}), which the fitted rates make exactly 1 / (2 h^2).
    std::vector<double> e(n - 1);
    for (int i = 0; i + 1 < n; ++i) e[i] = std::sqrt(generator.upper()[i] * generator.lower()[i]);
    eigenvectors_.resize(n, n);
    lapack_int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, d.data(), e.data(),
                                     eigenvectors_.data(), n);
    if (info != 0) throw NumericFailure("tridiagonal eigensolver failed, info " + std::to_string(info));
    eigenvalues_ = Eigen::Map<Eigen::VectorXd>(d.data(), n);
    const auto& lw = generator.log_weights();
    double top = *std::max_element(lw.begin(), lw.end());
    half_log_weights_.resize(n);
    for (int i = 0; i < n; ++i) half_log_weights_[i] = 0.5 * (lw[i] - top);
}

TransitionKernel SemigroupSpectrum::kernel(double t) const {
    if (!(t >= 0.0)) throw ValidationError("kernel time must be >= 0");
    if (t == 0.0) return identity_kernel(grid_);
    int n = grid_.size();
    Eigen::ArrayXd scale = (0.5 * t * eigenvalues_.array()).exp();
    Eigen::MatrixXd w = eigenvectors_ * scale.matrix().asDiagonal();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    k.selfadjointView<Eigen::Lower>().rankUpdate(w);
    k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) k(i, j) *= std::exp(half_log_weights_[j] - half_log_weights_[i]);
    }
    clean_rows(k);
    return TransitionKernel(grid_, t, std::move(k));
}

GridFunction SemigroupSpectrum::apply(double t, const GridFunction& f) const {
    int n = grid_.size();
    if (static_cast<int>(f.size()) != n) throw ValidationError("spectrum apply: size mismatch");
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = std::exp(half_log_weights_[i]) * f[i];
    Eigen::VectorXd c = eigenvectors_.transpose() * g;
    c.array() *= (t * eigenvalues_.array()).exp();
    Eigen::VectorXd y = eigenvectors_ * c;
    GridFunction out(n);
    for (int i = 0; i < n; ++i) out[i] = y[i] * std::exp(-half_log_weights_[i]);
    return out;
}

TransitionKernel transition_kernel(const GeneratorMatrix& generator, double delta_t,
                                   KernelMethod method) {
    if (!(delta_t >= 0.0)) throw ValidationError("delta_t must be >= 0");
    if (delta_t == 0.0) return identity_kernel(generator.grid());
    if (method == KernelMethod::spectral) return SemigroupSpectrum(generator).kernel(delta_t);
    Eigen::MatrixXd a = generator.dense() * delta_t;
    Eigen::MatrixXd k = a.exp();
    clean_rows(k);
    return TransitionKernel(generator.grid(), delta_t, std::move(k));
}

TransitionKernel transition_kernel(const Drift& b, const SpatialGrid& grid, double delta_t,
                                   KernelMethod method) {
    return transition_kernel(discretize_generator(b, grid), delta_t, method);
}

double transition_density(const TransitionKernel& k, int i, int j) {
    if (i < 0 || j < 0 || i >= k.size() || j >= k.size()) {
        throw ValidationError("transition_density: index out of range");
    }
    return k.matrix()(i, j) / k.grid().spacing();
}

GridFunction apply_operator(const TransitionKernel& k, const GridFunction& f) {
    if (static_cast<int>(f.size()) != k.size()) throw ValidationError("apply_operator: size mismatch");
    for (double v : f) {
        if (!std::isfinite(v)) throw ValidationError("apply_operator: non-finite input");
    }
    Eigen::VectorXd y = k.matrix() * Eigen::Map<const Eigen::VectorXd>(f.data(), k.size());
    return GridFunction(y.data(), y.data() + y.size());
}

FiniteMeasure::FiniteMeasure(SpatialGrid grid, std::vector<double> weights)
    : grid_(grid), weights_(std::move(weights)), total_(0.0) {
    if (static_cast<int>(weights_.size()) != grid.size()) {
        throw ValidationError("measure weights do not match grid");
    }
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("measure weights must be >= 0");
        total_ += w;
    }
    if (!(total_ > 0.0)) throw ValidationError("measure must have positive mass");
}

FiniteMeasure FiniteMeasure::gaussian(const SpatialGrid& grid, double mean, double sd) {
    if (!(sd > 0.0)) throw ValidationError("gaussian measure needs sd > 0");
    auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); };
    int n = grid.size();
    double h = grid.spacing();
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        double lo = i == 0 ? 0.0 : cdf(grid.node(i) - 0.5 * h);
        double hi = i == n - 1 ? 1.0 : cdf(grid.node(i) + 0.5 * h);
        w[i] = std::max(hi - lo, 0.0);
    }
    return FiniteMeasure(grid, std::move(w));
}

double FiniteMeasure::mass_of(double a, double b) const {
    double s = 0.0;
    for (int i = 0; i < grid_.size(); ++i) {
        double x = grid_.node(i);
        if (x >= a && x <= b) s += weights_[i];
    }
    return s;
}

const std::vector<TestFunction>& test_function_dictionary() {
    static const std::vector<TestFunction> dict = {
        {"tanh", [](double x) { return std::tanh(x); }},
        {"tanh_half", [](double x) { return std::tanh(0.5 * x); }},
        {"sin_gauss", [](double x) { return std::sin(x) * std::exp(-x * x / 8.0); }},
        {"cos_gauss", [](double x) { return std::cos(x) * std::exp(-x * x / 8.0); }},
        {"cauchy", [](double x) { return 1.0 / (1.0 + x * x); }},
        {"x_gauss", [](double x) { return x * std::exp(0.5 - 0.5 * x * x); }},
        {"ind_m1_1", [](double x) { return drifts::smoothed_indicator(x, 0.0, 1.0, 4.0); }},
        {"ind_0_2", [](double x) { return drifts::smoothed_indicator(x, 1.0, 1.0, 4.0); }},
    };
    return dict;
}

const TestFunction& test_function(const std::string& id) {
    for (const auto& t : test_function_dictionary()) {
        if (t.id == id) return t;
    }
    throw ValidationError("unknown test function '" + id + "'");
}

GridFunction sample_on(const SpatialGrid& grid, const std::function<double(double)>& f) {
    GridFunction out(grid.size());
    for (int i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
    return out;
}

void require_test_function_bound(const GridFunction& f) {
    for (double v : f) {
        if (!(std::abs(v) <= 1.0 + 1e-12)) {
            throw ValidationError("test function must satisfy sup|f| <= 1");
        }
    }
}

double weak_distance(const GridFunction& p1f, const GridFunction& p2f, const FiniteMeasure& nu) {
    if (p1f.size() != nu.weights().size() || p2f.size() != nu.weights().size()) {
        throw ValidationError("weak_distance: size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p1f.size(); ++i) s += nu.weights()[i] * std::abs(p1f[i] - p2f[i]);
    return s;
}

double weak_distance(const Drift& b1, const Drift& b2, const GridFunction& f,
                     const FiniteMeasure& nu, double delta_t) {
    require_test_function_bound(f);
    if (b1.fingerprint() == b2.fingerprint()) return 0.0;
    auto k1 = transition_kernel(b1, nu.grid(), delta_t);
    auto k2 = transition_kernel(b2, nu.grid(), delta_t);
    return weak_distance(apply_operator(k1, f), apply_operator(k2, f), nu);
}

double weak_distance_rate_proxy(const Drift& b1, const Drift& b2, const GridFunction& f,
                                const FiniteMeasure& nu) {
    const auto& g = nu.grid();
    int n = g.size();
    if (static_cast<int>(f.size()) != n) throw ValidationError("rate proxy: size mismatch");
    double h = g.spacing();
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        double df = i == 0           ? (f[1] - f[0]) / h
                    : i == n - 1     ? (f[n - 1] - f[n - 2]) / h
                                     : (f[i + 1] - f[i - 1]) / (2.0 * h);
        double x = g.node(i);
        s += nu.weights()[i] * std::abs((b1(x) - b2(x)) * df);
    }
    return s;
}

}  // namespace ergodrift
