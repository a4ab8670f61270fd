#include <gtest/gtest.h>

#include <cmath>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/errors.hpp"
#include "ergodrift/posterior.hpp"
#include "ergodrift/priors.hpp"
#include "ergodrift/specs.hpp"
#include "oracles.hpp"

using namespace ergodrift;

namespace {

ObservationRecord ou_record(int n, std::uint64_t seed, double delta = 0.5) {
    static const SpatialGrid g(-7, 7, 1401);
    static const InvariantDensity pi = invariant_density(drifts::ornstein_uhlenbeck(), g);
    Rng rng(seed);
    return discrete_observations(drifts::ornstein_uhlenbeck(), pi, delta, n, 0.0, rng);
}

// KL between the exact OU(theta1) and OU(theta0) transition laws averaged over
// the OU(theta0) stationary law.
double ou_kl(double theta0, double theta1, double delta) {
    double v0 = (1 - std::exp(-2 * theta0 * delta)) / (2 * theta0);
    double v1 = (1 - std::exp(-2 * theta1 * delta)) / (2 * theta1);
    double dm = std::exp(-theta0 * delta) - std::exp(-theta1 * delta);
    double ex2 = 1.0 / (2 * theta0);
    return 0.5 * (std::log(v1 / v0) + (v0 + dm * dm * ex2) / v1 - 1.0);
}

}  // namespace

TEST(Likelihood, InitialTermOnly) {
    ObservationRecord rec;
    rec.delta_t = 0.5;
    rec.observations = {0.3};
    SpatialGrid g(-6, 6, 601);
    LikelihoodContext ctx(rec, g);
    auto b = drifts::ornstein_uhlenbeck();
    auto pi = invariant_density(b, g);
    EXPECT_NEAR(log_likelihood(ctx, b), std::log(pi.at(0.3)), 1e-12);
}

TEST(Likelihood, RatioToSelfIsZero) {
    SpatialGrid g(-7, 7, 401);
    auto b0 = drifts::ornstein_uhlenbeck();
    LikelihoodContext ctx(ou_record(100, 1), g, b0);
    EXPECT_EQ(log_likelihood_ratio(ctx, b0), 0.0);
    EXPECT_THROW(log_likelihood_ratio(LikelihoodContext(ou_record(5, 1), g), b0), ValidationError);
}

TEST(Likelihood, OuClosedForm) {
    int n = 1000;
    auto rec = ou_record(n, 2);
    SpatialGrid g(-7, 7, 1401);
    LikelihoodContext ctx(rec, g);
    double exact = oracle::ou_log_likelihood(rec.observations, 0.5);
    EXPECT_LT(std::abs(log_likelihood(ctx, drifts::ornstein_uhlenbeck()) - exact), 0.01 * n);
}

TEST(Likelihood, CoverageAndCacheCoherence) {
    auto rec = ou_record(50, 3);
    rec.observations[10] = 9.0;
    try {
        LikelihoodContext ctx(rec, SpatialGrid(-7, 7, 141));
        FAIL();
    } catch (const CoverageError& e) {
        EXPECT_GE(e.suggested_radius(), 9.0);
    }
    SpatialGrid g(-7, 7, 281);
    LikelihoodContext ctx(ou_record(200, 3), g);
    auto b = drifts::tanh_restoring(1.3);
    double a = log_likelihood(ctx, b);
    EXPECT_EQ(ctx.cache()->size(), 1u);
    EXPECT_EQ(log_likelihood(ctx, drifts::tanh_restoring(1.3)), a);
    EXPECT_EQ(ctx.cache()->size(), 1u);
    auto pre = ctx.prefix(20);
    EXPECT_EQ(pre.observations().transitions(), 20);
    double s = 0.0;
    auto terms = ctx.log_terms(b);
    for (int i = 0; i <= 20; ++i) s += terms[i];
    EXPECT_NEAR(log_likelihood(pre, b), s, 1e-9);
}

TEST(Likelihood, TransientEvaluationLeavesCacheAlone) {
    LikelihoodContext ctx(ou_record(100, 4), SpatialGrid(-7, 7, 281));
    auto b = drifts::tanh_restoring(0.8);
    double t = log_likelihood(ctx, b, false);
    EXPECT_EQ(ctx.cache()->size(), 0u);
    EXPECT_EQ(log_likelihood(ctx, b), t);
    EXPECT_EQ(ctx.cache()->size(), 1u);
    EXPECT_EQ(ctx.cache()->transient(b), ctx.cache()->get(b));
}

TEST(Importance, ConstantLikelihoodIsUniform) {
    ObservationRecord rec;
    rec.delta_t = 0.5;
    rec.observations = {0.0};
    LikelihoodContext ctx(rec, SpatialGrid(-8, 8, 161));
    Drift b = tail_extend(drifts::zero(), 1.0);
    PriorSampler prior = [&](Rng&) { return b; };
    Rng rng(4);
    auto e = posterior_importance(prior, ctx, 40, rng);
    EXPECT_NEAR(e.ess, 40.0, 1e-9);
    for (const auto& m : e.members) EXPECT_NEAR(m.weight, 1.0 / 40, 1e-15);
    EXPECT_FALSE(e.degenerate);
}

TEST(Importance, ComplementAdditivity) {
    SpatialGrid g(-8, 8, 161);
    LikelihoodContext ctx(ou_record(50, 5), g);
    auto prior = shift_family_prior(1.0, 2.0, -0.5, 0.5).sampler;
    Rng rng(5);
    auto e = posterior_importance(prior, ctx, 30, rng);
    auto pred = [](const Drift& d) { return d(0.0) > 0.0; };
    double p = posterior_probability(e, pred);
    double q = posterior_probability(e, [&](const Drift& d) { return !pred(d); });
    EXPECT_NEAR(p + q, 1.0, 1e-12);
    EXPECT_EQ(posterior_probability(e, [](const Drift&) { return true; }), 1.0);
    EXPECT_EQ(posterior_probability(e, [](const Drift&) { return false; }), 0.0);
}

TEST(Discrete, TwoAtomBayesFactor) {
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    auto far = drifts::with_bump(b0, 0.5, 0.0, 1.0, 4.0);
    auto prior = NetPriorSpec::from_atoms({b0, far}, {0.5, 0.5});
    SpatialGrid g(-8, 8, 401);
    auto pi0 = invariant_density(b0, g);
    Rng rng(6);
    auto rec = discrete_observations(b0, pi0, 0.5, 2000, 0.0, rng);
    LikelihoodContext ctx(rec, g);
    auto e = posterior_discrete(prior, ctx);
    double w0 = posterior_probability(e, [&](const Drift& d) { return d.fingerprint() == b0.fingerprint(); });
    EXPECT_GE(w0, 0.99);
}

TEST(Ensemble, NormalizationInvariance) {
    std::vector<Drift> d{drifts::constant(0.1), drifts::constant(0.2), drifts::constant(0.3)};
    std::vector<double> w{0.2, 1.3, 0.7};
    auto pred = [](const Drift& b) { return b(0.0) > 0.15; };
    double ref = posterior_probability(DriftEnsemble::from_weights(d, w), pred);
    for (double c : {1e-200, 3.0, 1e150}) {
        std::vector<double> scaled = w;
        for (double& v : scaled) v *= c;
        EXPECT_DOUBLE_EQ(posterior_probability(DriftEnsemble::from_weights(d, scaled), pred), ref);
        std::vector<double> lw;
        for (double v : scaled) lw.push_back(std::log(v));
        EXPECT_NEAR(posterior_probability(DriftEnsemble::from_log_weights(d, lw), pred), ref, 1e-12);
    }
}

TEST(Mcmc, ZeroDataRecoversPrior) {
    auto spec = WaveletPriorSpec::defaults();
    ChainConfig cfg;
    cfg.iterations = 10000;
    cfg.burn_in = 1000;
    cfg.thin = 20;
    Rng rng(7);
    std::vector<std::vector<double>> raw;
    auto e = posterior_mcmc(spec, 0, 1, [](const Drift&) { return 0.0; }, cfg, rng, &raw);
    ASSERT_EQ(raw.size(), 10000u);
    EXPECT_EQ(e.members.size(), 10000u);
    for (std::size_t c = 0; c < raw[0].size(); ++c) {
        std::vector<double> col;
        for (const auto& r : raw) col.push_back(r[c]);
        double ks = oracle::ks_statistic(col, [&](double x) { return (x + spec.L) / (2 * spec.L); });
        EXPECT_LT(ks, 0.05) << "coordinate " << c;
    }
}

TEST(Mcmc, TwoCoefficientToyMatchesImportance) {
    auto spec = WaveletPriorSpec::defaults();
    CoefficientLayout layout{{{-1, 0, 0}, {0, 0, 0}}};
    auto loglik = [](const Drift& b) {
        double r = b(1.7) - 0.4;
        return -r * r / (2 * 0.02);
    };
    ChainConfig cfg;
    cfg.iterations = 40000;
    cfg.burn_in = 2000;
    cfg.thin = 2;
    Rng rng(8);
    std::vector<std::vector<double>> raw;
    posterior_mcmc(spec, 0, 3, loglik, cfg, rng, &raw, &layout);

    const int B = 5;
    auto bin = [&](double v) { return std::clamp(static_cast<int>((v + 1.0) / 2.0 * B), 0, B - 1); };
    std::vector<double> chain(B * B, 0.0), is(B * B, 0.0);
    for (const auto& r : raw) chain[bin(r[0]) * B + bin(r[1])] += 1.0 / raw.size();
    Rng irng(9);
    double total = 0.0;
    for (int t = 0; t < 200000; ++t) {
        std::vector<double> th{irng.uniform(-1, 1), irng.uniform(-1, 1)};
        double w = std::exp(loglik(wavelet_drift(spec.system, assemble_coefficients(layout, th, spec.s, spec.L), 3)));
        is[bin(th[0]) * B + bin(th[1])] += w;
        total += w;
    }
    double tv = 0.0;
    for (int i = 0; i < B * B; ++i) tv += 0.5 * std::abs(chain[i] - is[i] / total);
    EXPECT_LT(tv, 0.05);
}

TEST(Mcmc, AcceptanceAfterAdaptation) {
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    SpatialGrid g(-8, 8, 161);
    auto pi0 = invariant_density(b0, g);
    Rng rng(10);
    auto rec = discrete_observations(b0, pi0, 0.5, 200, 0.0, rng);
    LikelihoodContext ctx(rec, g);
    ChainConfig cfg;
    cfg.iterations = 300;
    cfg.burn_in = 400;
    auto e = posterior_mcmc(WaveletPriorSpec::defaults(), 0, 2, ctx, cfg, rng);
    EXPECT_GE(e.acceptance_rate, 0.1);
    EXPECT_LE(e.acceptance_rate, 0.6);
    EXPECT_EQ(e.kind, EnsembleKind::mcmc);
}

TEST(Kl, IdenticalDrifts) {
    SpatialGrid g(-6, 6, 301);
    auto r = kl_divergence(drifts::ornstein_uhlenbeck(), drifts::ornstein_uhlenbeck(), 0.5, g);
    EXPECT_NEAR(r.kl_value, 0.0, 1e-8);
    EXPECT_EQ(r.upper_bound, 0.0);
    EXPECT_TRUE(r.within_bound);
}

TEST(Kl, OuPairAgainstFineGridAndClosedForm) {
    auto b0 = drifts::ornstein_uhlenbeck(1.0), b = drifts::ornstein_uhlenbeck(1.2);
    auto coarse = kl_divergence(b0, b, 0.5, SpatialGrid(-6, 6, 301));
    auto fine = kl_divergence(b0, b, 0.5, SpatialGrid(-6, 6, 1201));
    EXPECT_NEAR(coarse.kl_value, fine.kl_value, 0.02 * fine.kl_value);
    EXPECT_NEAR(fine.kl_value, ou_kl(1.0, 1.2, 0.5), 0.02 * ou_kl(1.0, 1.2, 0.5));
    EXPECT_NEAR(fine.l2_mu0, 0.2 * std::sqrt(0.5), 1e-3);
    EXPECT_LE(fine.kl_value, fine.upper_bound);
}

TEST(L2Mu0, ConstantShiftAndSymmetry) {
    SpatialGrid g(-6, 6, 1201);
    auto pi0 = invariant_density(drifts::ornstein_uhlenbeck(), g);
    auto b0 = drifts::tanh_restoring(1.0), b = drifts::with_bump(b0, 0.3, 0.0, 50.0, 1.0);
    EXPECT_EQ(l2_mu0_distance(b0, b0, pi0), 0.0);
    EXPECT_NEAR(l2_mu0_distance(b, b0, pi0), 0.3, 1e-6);
    EXPECT_EQ(l2_mu0_distance(b, b0, pi0), l2_mu0_distance(b0, b, pi0));
    EXPECT_NEAR(l2_mu0_distance(drifts::ornstein_uhlenbeck(1.2), drifts::ornstein_uhlenbeck(), pi0),
                0.2 * std::sqrt(0.5), 1e-3);
}

TEST(Hellinger, IdenticalAndInequality) {
    SpatialGrid g(-6, 6, 241);
    auto k1 = transition_kernel(drifts::tanh_restoring(1.0), g, 0.5);
    auto k2 = transition_kernel(drifts::tanh_with_sines(1.5, 0.7, {0.4}, {2.0}, {0.0}), g, 0.5);
    oracle::Gen gen(11);
    for (int t = 0; t < 50; ++t) {
        int row = gen.integer(0, g.size() - 1);
        EXPECT_NEAR(hellinger_affinity(k1, k1, row), 1.0, 1e-8);
        double A = hellinger_affinity(k1, k2, row);
        double h2 = 2.0 - 2.0 * A;
        EXPECT_GE(h2, -1e-12);
        EXPECT_LE(h2, 2.0);
        double lhs = 0.0;
        for (int j = 0; j < g.size(); ++j) {
            lhs += gen.uniform(-1, 1) * (k1.matrix()(row, j) - k2.matrix()(row, j));
        }
        EXPECT_GE(h2 + 1e-12, 0.25 * lhs * lhs);
    }
    EXPECT_THROW(hellinger_affinity(k1, transition_kernel(drifts::zero(), g, 0.25), 0), ValidationError);
}

// ------------------------------------------------------------------ properties

TEST(PosteriorProperties, KlNonnegativeAndBounded) {
    auto spec = WaveletPriorSpec::defaults();
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    SpatialGrid g(-14, 14, 561);
    ModelCache cache(g, 0.5);
    auto m0 = cache.get(b0);
    Rng rng(12);
    for (int t = 0; t < 15; ++t) {
        auto b = draw_wavelet_prior(spec, rng);
        auto r = kl_divergence(*m0, b0, *cache.get(b), b);
        EXPECT_GE(r.kl_value, -1e-8);
        EXPECT_TRUE(r.within_bound) << r.kl_value << " vs " << r.upper_bound;
    }
}
