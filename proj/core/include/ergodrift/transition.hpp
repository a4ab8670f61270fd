#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ergodrift/drift.hpp"
#include "ergodrift/grid.hpp"

namespace ergodrift {

/// Tridiagonal generator of the grid chain approximating A_b f = b f' + f''/2
/// with reflecting ends.
///
/// Rates are exponentially fitted to the speed measure:
///   up(i)   = exp(+phi_i) / (2 h^2),  down(i+1) = exp(-phi_i) / (2 h^2),
/// phi_i = \int_{x_i}^{x_{i+1}} b. Off-diagonals are positive for every drift,
/// the scheme is second-order consistent, and the chain satisfies detailed
/// balance with the node values of the speed density.
class GeneratorMatrix {
public:
    const SpatialGrid& grid() const noexcept { return grid_; }
    /// Rate i -> i+1 (size n-1).
    const std::vector<double>& upper() const noexcept { return upper_; }
    /// Rate i+1 -> i (size n-1).
    const std::vector<double>& lower() const noexcept { return lower_; }
    /// Diagonal, equal to minus the row's off-diagonal sum.
    const std::vector<double>& diagonal() const noexcept { return diagonal_; }
    /// Unnormalized log invariant weights of the chain, 2 \int_{lo}^{x_i} b.
    const std::vector<double>& log_weights() const noexcept { return log_weights_; }

    Eigen::MatrixXd dense() const;
    /// (A f)_i.
    GridFunction apply(const GridFunction& f) const;

private:
    friend GeneratorMatrix discretize_generator(const Drift&, const SpatialGrid&);
    GeneratorMatrix(SpatialGrid grid) : grid_(grid) {}

    SpatialGrid grid_;
    std::vector<double> upper_;
    std::vector<double> lower_;
    std::vector<double> diagonal_;
    std::vector<double> log_weights_;
};

/// Throws GridTooCoarse unless h * max|b| < 1 on the grid.
GeneratorMatrix discretize_generator(const Drift& b, const SpatialGrid& grid);

/// Row-stochastic matrix: entry (i, j) is the probability of moving from node i
/// into the cell of node j over time delta_t.
class TransitionKernel {
public:
    TransitionKernel(SpatialGrid grid, double delta_t, Eigen::MatrixXd matrix);

    const SpatialGrid& grid() const noexcept { return grid_; }
    double delta_t() const noexcept { return delta_t_; }
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    int size() const noexcept { return grid_.size(); }

private:
    SpatialGrid grid_;
    double delta_t_;
    Eigen::MatrixXd matrix_;
};

/// Entries below this floor are raised to it before row renormalization.
inline constexpr double kKernelFloor = 1e-14;

enum class KernelMethod {
    spectral,  ///< eigen-decomposition of the symmetrized tridiagonal generator
    pade,      ///< dense scaling-and-squaring Pade exponential
};

/// Eigen-decomposition of the symmetrized generator D^{1/2} A D^{-1/2}. One
/// decomposition serves every time t.
class SemigroupSpectrum {
public:
    explicit SemigroupSpectrum(const GeneratorMatrix& generator);

    const SpatialGrid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

    TransitionKernel kernel(double t) const;
    /// exp(tA) f without forming the kernel (no floor/renormalization).
    GridFunction apply(double t, const GridFunction& f) const;

private:
    SpatialGrid grid_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    Eigen::VectorXd half_log_weights_;
};

TransitionKernel transition_kernel(const GeneratorMatrix& generator, double delta_t,
                                   KernelMethod method = KernelMethod::spectral);

/// Convenience: discretize and exponentiate.
TransitionKernel transition_kernel(const Drift& b, const SpatialGrid& grid, double delta_t,
                                   KernelMethod method = KernelMethod::spectral);

/// p_b(delta_t, x_i, x_j) = K(i, j) / h.
double transition_density(const TransitionKernel& k, int i, int j);

GridFunction apply_operator(const TransitionKernel& k, const GridFunction& f);

/// Finite measure on the grid nodes.
class FiniteMeasure {
public:
    FiniteMeasure(SpatialGrid grid, std::vector<double> weights);

    /// Cell masses of N(mean, sd^2); the end cells absorb the tails so the total is 1.
    static FiniteMeasure gaussian(const SpatialGrid& grid, double mean = 0.0, double sd = 1.0);

    const SpatialGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double total_mass() const noexcept { return total_; }
    /// nu mass of nodes inside [a, b].
    double mass_of(double a, double b) const;

private:
    SpatialGrid grid_;
    std::vector<double> weights_;
    double total_;
};

/// Bounded test functions used to probe the weak topology.
struct TestFunction {
    std::string id;
    std::function<double(double)> f;
};

/// The eight-function dictionary: tanh, tanh_half, sin_gauss, cos_gauss, cauchy,
/// x_gauss, ind_m1_1, ind_0_2. Every member satisfies sup|f| <= 1.
const std::vector<TestFunction>& test_function_dictionary();
const TestFunction& test_function(const std::string& id);
GridFunction sample_on(const SpatialGrid& grid, const std::function<double(double)>& f);

/// || P^{b1} f - P^{b2} f ||_{1, nu} at time delta_t. Requires sup|f| <= 1.
double weak_distance(const Drift& b1, const Drift& b2, const GridFunction& f,
                     const FiniteMeasure& nu, double delta_t);
/// Same quantity from already evaluated P^{b1} f and P^{b2} f.
double weak_distance(const GridFunction& p1f, const GridFunction& p2f, const FiniteMeasure& nu);

/// Small-time proxy || (b1 - b2) f' ||_{1, nu}; weak_distance / delta_t approaches it
/// as delta_t -> 0. Diagnostic only.
double weak_distance_rate_proxy(const Drift& b1, const Drift& b2, const GridFunction& f,
                                const FiniteMeasure& nu);

void require_test_function_bound(const GridFunction& f);

// Kernel files: one header line
//   ERGODRIFT-KERNEL <text|binary> <lo> <hi> <n_points> <delta_t>
// followed by n*n row-major values, either whitespace separated with 17
// significant digits or raw little-endian IEEE-754 doubles.
enum class KernelFileFormat { text, binary };

void write_kernel(const TransitionKernel& k, const std::string& path, KernelFileFormat format);
TransitionKernel read_kernel(const std::string& path);

}  // namespace ergodrift
