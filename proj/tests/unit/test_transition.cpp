#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/errors.hpp"
#include "ergodrift/transition.hpp"
#include "oracles.hpp"

using namespace ergodrift;

namespace {

Drift random_bounded_drift(oracle::Gen& g) {
    return drifts::tanh_with_sines(g.uniform(1.0, 2.5), g.uniform(0.5, 2.0),
                                   {g.uniform(-0.5, 0.5), g.uniform(-0.4, 0.4)},
                                   {g.uniform(0.5, 4.0), g.uniform(0.5, 4.0)},
                                   {g.uniform(0.0, 6.28), g.uniform(0.0, 6.28)});
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Fine-grid Pade oracle, frozen.
constexpr double kOuBumpWeakDistance = 0.1088222045;

}  // namespace

TEST(Generator, ZeroDriftIsSecondDifference) {
    SpatialGrid g(-1, 1, 11);
    auto A = discretize_generator(drifts::zero(), g);
    double h = g.spacing();
    for (int i = 1; i + 1 < g.size(); ++i) {
        EXPECT_NEAR(A.upper()[i], 1.0 / (2 * h * h), 1e-9);
        EXPECT_NEAR(A.lower()[i - 1], 1.0 / (2 * h * h), 1e-9);
        EXPECT_NEAR(A.diagonal()[i], -1.0 / (h * h), 1e-9);
    }
}

TEST(Generator, RowSumsAndPositivity) {
    oracle::Gen gen(7);
    for (int t = 0; t < 20; ++t) {
        SpatialGrid g(-6, 6, 2 * gen.integer(50, 300) + 1);
        auto A = discretize_generator(random_bounded_drift(gen), g);
        auto ones = A.apply(GridFunction(g.size(), 1.0));
        for (double v : ones) EXPECT_NEAR(v, 0.0, 1e-12 / (g.spacing() * g.spacing()));
        for (double v : A.upper()) EXPECT_GT(v, 0.0);
        for (double v : A.lower()) EXPECT_GT(v, 0.0);
    }
}

TEST(Generator, ActsOnIdentityAsDrift) {
    SpatialGrid g(-6, 6, 1201);
    auto A = discretize_generator(drifts::ornstein_uhlenbeck(), g);
    auto out = A.apply(g.nodes());
    for (int i = 1; i + 1 < g.size(); ++i) {
        double x = g.node(i);
        if (std::abs(x) <= 4.0) EXPECT_NEAR(out[i], -x, 1e-3);
    }
}

TEST(Generator, CoarseGridRejected) {
    SpatialGrid g(-6, 6, 11);
    try {
        discretize_generator(drifts::constant(1.0), g);
        FAIL();
    } catch (const GridTooCoarse& e) {
        EXPECT_GT(e.suggested_points(), 11);
    }
}

TEST(Kernel, ZeroTimeIsIdentity) {
    SpatialGrid g(-3, 3, 61);
    auto K = transition_kernel(drifts::tanh_restoring(1.0), g, 0.0);
    EXPECT_LT(max_abs(K.matrix() - Eigen::MatrixXd::Identity(61, 61)), 1e-12);
    EXPECT_NEAR(transition_density(K, 5, 5), 1.0 / g.spacing(), 1e-9);
    EXPECT_LT(transition_density(K, 5, 6), 1e-10);
    EXPECT_THROW(transition_density(K, 0, 61), ValidationError);
}

TEST(Kernel, ChapmanKolmogorov) {
    SpatialGrid g(-6, 6, 401);
    auto A = discretize_generator(drifts::tanh_with_sines(1.5, 1.0, {0.3}, {2.0}, {0.5}), g);
    SemigroupSpectrum S(A);
    auto Ks = S.kernel(0.2).matrix(), Kt = S.kernel(0.3).matrix(), Kst = S.kernel(0.5).matrix();
    EXPECT_LT(max_abs(Ks * Kt - Kst), 1e-6);
}

TEST(Kernel, SpectralAgreesWithPade) {
    SpatialGrid g(-6, 6, 201);
    auto A = discretize_generator(drifts::tanh_restoring(1.2, 0.7), g);
    auto K1 = transition_kernel(A, 0.5, KernelMethod::spectral).matrix();
    auto K2 = transition_kernel(A, 0.5, KernelMethod::pade).matrix();
    EXPECT_LT(max_abs(K1 - K2), 1e-9);
}

TEST(Kernel, BrownianRowIsGaussian) {
    SpatialGrid g(-10, 10, 1001);
    auto K = transition_kernel(drifts::zero(), g, 0.25);
    int i = 500;
    double h = g.spacing(), err = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        double y = g.node(j);
        double mass = oracle::normal_cdf(y + h / 2, 0, 0.5) - oracle::normal_cdf(y - h / 2, 0, 0.5);
        err = std::max(err, std::abs(K.matrix()(i, j) - mass));
    }
    EXPECT_LT(err, 1e-3);
}

TEST(Kernel, OuRowMatchesClosedForm) {
    SpatialGrid g(-6, 6, 1001);
    double dt = 0.5;
    auto K = transition_kernel(drifts::ornstein_uhlenbeck(), g, dt);
    double var = (1 - std::exp(-2 * dt)) / 2;
    for (int i : {300, 500, 650}) {
        double x = g.node(i), err = 0.0;
        for (int j = 0; j < g.size(); ++j) {
            double ref = oracle::normal_pdf(g.node(j), x * std::exp(-dt), var);
            err = std::max(err, std::abs(transition_density(K, i, j) - ref));
        }
        EXPECT_LT(err, 1e-3) << "row " << i;
    }
}

TEST(Kernel, LongTimeRowIsInvariantDensity) {
    SpatialGrid g(-6, 6, 601);
    auto b = drifts::ornstein_uhlenbeck();
    auto K = transition_kernel(b, g, 20.0);
    auto pi = invariant_density(b, g);
    double err = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        err = std::max(err, std::abs(transition_density(K, 300, j) - pi.values()[j]));
    }
    EXPECT_LT(err, 1e-4);
}

TEST(ApplyOperator, ConstantsAndIdentity) {
    SpatialGrid g(-6, 6, 301);
    auto K = transition_kernel(drifts::tanh_restoring(1.0), g, 0.7);
    for (double v : apply_operator(K, GridFunction(g.size(), 1.0))) EXPECT_NEAR(v, 1.0, 1e-8);
    auto f = sample_on(g, [](double x) { return std::sin(3 * x); });
    auto K0 = transition_kernel(drifts::tanh_restoring(1.0), g, 0.0);
    auto out = apply_operator(K0, f);
    for (int i = 0; i < g.size(); ++i) EXPECT_NEAR(out[i], f[i], 1e-12);
}

TEST(ApplyOperator, OuConditionalMean) {
    SpatialGrid g(-7, 7, 1401);
    double dt = 0.5;
    auto K = transition_kernel(drifts::ornstein_uhlenbeck(), g, dt);
    auto out = apply_operator(K, g.nodes());
    for (int i = 0; i < g.size(); ++i) {
        double x = g.node(i);
        if (std::abs(x) <= 3.0) EXPECT_NEAR(out[i], x * std::exp(-dt), 1e-3);
    }
}

TEST(Measure, GaussianCellMasses) {
    SpatialGrid g(-5, 5, 101);
    auto nu = FiniteMeasure::gaussian(g);
    EXPECT_NEAR(nu.total_mass(), 1.0, 1e-12);
    EXPECT_NEAR(nu.mass_of(-1.0, 1.0),
                oracle::normal_cdf(1.05) - oracle::normal_cdf(-1.05), 1e-12);
    EXPECT_THROW(FiniteMeasure(g, std::vector<double>(101, 0.0)), ValidationError);
}

TEST(Dictionary, EightBoundedFunctions) {
    const auto& d = test_function_dictionary();
    ASSERT_EQ(d.size(), 8u);
    for (const auto& tf : d) {
        double m = 0.0;
        for (double x = -20; x <= 20; x += 0.001) m = std::max(m, std::abs(tf.f(x)));
        EXPECT_LE(m, 1.0) << tf.id;
        EXPECT_GT(m, 0.3) << tf.id;
    }
    EXPECT_THROW(test_function("nope"), ValidationError);
}

TEST(WeakDistance, BasicContracts) {
    SpatialGrid g(-6, 6, 301);
    auto nu = FiniteMeasure::gaussian(g);
    auto f = sample_on(g, test_function("tanh").f);
    auto b = drifts::tanh_restoring(1.0);
    EXPECT_EQ(weak_distance(b, b, f, nu, 0.5), 0.0);
    double d = weak_distance(b, drifts::tanh_restoring(2.0), f, nu, 0.5);
    EXPECT_GT(d, 0.0);
    EXPECT_LE(d, 2.0 * nu.total_mass());
    auto big = sample_on(g, [](double x) { return 2.0 * std::tanh(x); });
    EXPECT_THROW(weak_distance(b, b, big, nu, 0.5), ValidationError);
}

// Coarse spectral value against a 4x finer grid exponentiated by Pade.
TEST(WeakDistance, OuBumpAgainstFineGrid) {
    auto b1 = drifts::ornstein_uhlenbeck();
    auto b2 = drifts::with_bump(b1, 0.5, 0.0, 1.0, 4.0);
    auto f = test_function("tanh").f;
    SpatialGrid coarse(-8, 8, 201);
    auto nu = FiniteMeasure::gaussian(coarse);
    double d = weak_distance(b1, b2, sample_on(coarse, f), nu, 0.5);

    SpatialGrid fine(-8, 8, 801);
    auto p1 = apply_operator(transition_kernel(b1, fine, 0.5, KernelMethod::pade), sample_on(fine, f));
    auto p2 = apply_operator(transition_kernel(b2, fine, 0.5, KernelMethod::pade), sample_on(fine, f));
    double ref = 0.0;
    for (int i = 0; i < coarse.size(); ++i) ref += nu.weights()[i] * std::abs(p1[4 * i] - p2[4 * i]);

    EXPECT_NEAR(d, ref, 0.01 * ref);
    EXPECT_NEAR(ref, kOuBumpWeakDistance, 1e-4);
}

TEST(WeakDistance, SmallTimeRate) {
    SpatialGrid g(-8, 8, 801);
    auto nu = FiniteMeasure::gaussian(g);
    auto f = sample_on(g, test_function("tanh").f);
    auto b1 = drifts::ornstein_uhlenbeck();
    auto b2 = drifts::with_bump(b1, 0.5, 0.0, 1.0, 4.0);
    double proxy = weak_distance_rate_proxy(b1, b2, f, nu);
    double dt = 0.01;
    EXPECT_NEAR(weak_distance(b1, b2, f, nu, dt) / dt, proxy, 0.05 * proxy);
}

TEST(KernelIo, TextAndBinaryRoundTrip) {
    SpatialGrid g(-3, 3, 41);
    auto K = transition_kernel(drifts::tanh_restoring(1.0), g, 0.5);
    auto dir = std::filesystem::temp_directory_path();
    for (auto fmt : {KernelFileFormat::text, KernelFileFormat::binary}) {
        auto path = (dir / (fmt == KernelFileFormat::text ? "k_rt.txt" : "k_rt.bin")).string();
        write_kernel(K, path, fmt);
        auto back = read_kernel(path);
        EXPECT_TRUE(back.grid() == g);
        EXPECT_EQ(back.delta_t(), 0.5);
        EXPECT_EQ(max_abs(back.matrix() - K.matrix()), 0.0);
        std::filesystem::remove(path);
    }
}

// ------------------------------------------------------------------ properties

TEST(TransitionProperties, StochasticPositiveAndInvariant) {
    oracle::Gen gen(41);
    for (int t = 0; t < 12; ++t) {
        Drift b = random_bounded_drift(gen);
        SpatialGrid g(-6, 6, 2 * gen.integer(60, 200) + 1);
        double dt = gen.uniform(0.05, 2.0);
        auto K = transition_kernel(b, g, dt);
        auto A = discretize_generator(b, g);
        Eigen::VectorXd w(g.size());
        double top = *std::max_element(A.log_weights().begin(), A.log_weights().end());
        for (int i = 0; i < g.size(); ++i) w[i] = std::exp(A.log_weights()[i] - top);
        w /= w.sum();
        const auto& M = K.matrix();
        for (int i = 0; i < g.size(); ++i) {
            EXPECT_NEAR(M.row(i).sum(), 1.0, 1e-8);
            EXPECT_GE(M.row(i).minCoeff(), kKernelFloor * 0.5);
        }
        EXPECT_LT((M.transpose() * w - w).lpNorm<1>(), 1e-5);
    }
}

TEST(TransitionProperties, Contraction) {
    oracle::Gen gen(43);
    SpatialGrid g(-6, 6, 241);
    for (int t = 0; t < 12; ++t) {
        auto K = transition_kernel(random_bounded_drift(gen), g, gen.uniform(0.1, 1.5));
        GridFunction f(g.size());
        double sup = 0.0;
        for (auto& v : f) sup = std::max(sup, std::abs(v = gen.uniform(-3, 3)));
        double out = 0.0;
        for (double v : apply_operator(K, f)) out = std::max(out, std::abs(v));
        EXPECT_LE(out, sup + 1e-8);
    }
}

TEST(TransitionProperties, DictionarySeparatesTestFamily) {
    SpatialGrid g(-8, 8, 321);
    auto nu = FiniteMeasure::gaussian(g);
    std::vector<Drift> family{drifts::ornstein_uhlenbeck(), drifts::ornstein_uhlenbeck(1.0, 0.3),
                              drifts::tanh_restoring(1.0), drifts::tanh_restoring(2.0, 0.5),
                              drifts::with_bump(drifts::tanh_restoring(1.0), 0.4, 1.0, 0.5)};
    for (std::size_t a = 0; a < family.size(); ++a) {
        for (std::size_t b = a + 1; b < family.size(); ++b) {
            double best = 0.0;
            for (const auto& tf : test_function_dictionary()) {
                best = std::max(best, weak_distance(family[a], family[b], sample_on(g, tf.f), nu, 0.5));
            }
            EXPECT_GT(best, 1e-4) << a << " vs " << b;
        }
    }
}
