#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergodrift/errors.hpp"
#include "ergodrift/lab.hpp"
#include "oracles.hpp"

using namespace ergodrift;
using json = nlohmann::json;

namespace {

json ou_truth() { return {{"kind", "tail_extended"}, {"base", {{"kind", "ou"}}}, {"m", 2.0}}; }

json small_config() {
    return {{"true_drift", ou_truth()},
            {"prior", {{"kind", "shift_family"}, {"m", 2.0}, {"shift_lo", -0.5}, {"shift_hi", 0.5}}},
            {"delta_t", 0.5},
            {"n_schedule", {20, 60}},
            {"grid", {{"radius", 10.0}, {"n_points", 401}}},
            {"epsilons", {0.05}},
            {"replications", 2},
            {"importance_draws", 16},
            {"fine_step_ratio", 20.0},
            {"martingale", {{"n", 40}, {"replications", 2}, {"prior_sample_size", 8}}}};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("ergodrift_lab_" + name)).string();
}

}  // namespace

TEST(Config, LoadsDefaultsAndOverrides) {
    auto c = load_experiment_config(small_config());
    EXPECT_EQ(c.n_schedule, (std::vector<int>{20, 60}));
    EXPECT_EQ(c.grid.size(), 401);
    EXPECT_DOUBLE_EQ(c.grid.hi(), 10.0);
    EXPECT_EQ(c.test_functions, std::vector<std::string>{"tanh"});
    EXPECT_EQ(c.martingale.n, 40);
    EXPECT_EQ(c.prior.kind, "shift_family");
    EXPECT_FALSE(c.prior.is_discrete());
}

TEST(Config, ValidationErrors) {
    auto bad = [](const std::function<void(json&)>& edit) {
        auto j = small_config();
        edit(j);
        EXPECT_THROW(load_experiment_config(j), ValidationError) << j.dump();
    };
    bad([](json& j) { j["delta_t"] = 0.0; });
    bad([](json& j) { j["n_schedule"] = {60, 20}; });
    bad([](json& j) { j["n_schedule"] = json::array(); });
    bad([](json& j) { j["epsilons"] = {-0.1}; });
    bad([](json& j) { j["test_functions"] = {"nope"}; });
    bad([](json& j) { j["generator"] = "milstein"; });
    bad([](json& j) { j["posterior_method"] = "mcmc"; });
    bad([](json& j) { j["prior"] = {{"kind", "unknown"}}; });
    bad([](json& j) { j.erase("true_drift"); });
    bad([](json& j) { j["replications"] = 0; });
    bad([](json& j) { j["delta_t"] = "half"; });
    bad([](json& j) { j["martingale"]["compact"] = {1.0, -1.0}; });
}

TEST(Config, MissingFileIsValidationError) {
    EXPECT_THROW(load_experiment_config_file("/nonexistent/cfg.json"), ValidationError);
    auto path = temp_path("broken.json");
    std::ofstream(path) << "{ not json";
    EXPECT_THROW(load_experiment_config_file(path), ValidationError);
}

TEST(AutoGrid, CoversInvariantLaw) {
    auto b = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    auto g = auto_grid(b, 0.05);
    EXPECT_LE(g.spacing(), 0.05 + 1e-12);
    EXPECT_NO_THROW(invariant_density(b, g));
    EXPECT_THROW(auto_grid(drifts::zero(), 0.05), CoverageError);
}

TEST(ParallelFor, RethrowsLowestIndex) {
    std::vector<int> hit(10, 0);
    parallel_for(10, 3, [&](int i) { hit[i] = i + 1; });
    for (int i = 0; i < 10; ++i) EXPECT_EQ(hit[i], i + 1);
    try {
        parallel_for(10, 3, [](int i) {
            if (i >= 4) throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "4");
    }
}

TEST(Consistency, PointMassAtTruthHasNoComplement) {
    auto j = small_config();
    j["prior"] = {{"kind", "point_mass"}, {"drift", ou_truth()}};
    auto curve = run_consistency_experiment(load_experiment_config(j), 3);
    ASSERT_EQ(curve.rows.size(), 2u * 2u);
    for (const auto& r : curve.rows) EXPECT_EQ(r.complement_mass, 0.0);
}

TEST(Consistency, EpsilonAboveTwiceNuMassGivesZero) {
    auto j = small_config();
    auto c = load_experiment_config(j);
    j["epsilons"] = {2.0 * c.nu().total_mass() + 1e-9};
    auto curve = run_consistency_experiment(load_experiment_config(j), 5);
    for (const auto& r : curve.rows) EXPECT_EQ(r.complement_mass, 0.0);
}

TEST(Consistency, MassesAreProbabilities) {
    auto curve = run_consistency_experiment(load_experiment_config(small_config()), 11);
    for (const auto& r : curve.rows) {
        EXPECT_GE(r.complement_mass, 0.0);
        EXPECT_LE(r.complement_mass, 1.0);
        EXPECT_GT(r.ess, 0.0);
    }
    auto s = curve.summary();
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].n, 20);
    EXPECT_LE(s[0].q25, s[0].median);
    EXPECT_LE(s[0].median, s[0].q75);
}

TEST(Consistency, ByteIdenticalCsvForSameSeed) {
    auto c = load_experiment_config(small_config());
    auto a = temp_path("a.csv"), b = temp_path("b.csv");
    write_consistency_csv(run_consistency_experiment(c, 42), a);
    write_consistency_csv(run_consistency_experiment(c, 42), b);
    auto sa = slurp(a);
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, slurp(b));
    EXPECT_EQ(sa.substr(0, sa.find('\n')),
              "replication,seed,n,test_function,epsilon,complement_mass,ess,chain_length");
}

TEST(Consistency, WorkerCountDoesNotChangeResults) {
    auto j = small_config();
    auto one = run_consistency_experiment(load_experiment_config(j), 8);
    j["workers"] = 2;
    auto two = run_consistency_experiment(load_experiment_config(j), 8);
    ASSERT_EQ(one.rows.size(), two.rows.size());
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        EXPECT_EQ(one.rows[i].complement_mass, two.rows[i].complement_mass);
    }
}

TEST(Modulus, MatchesBruteForce) {
    SpatialGrid g(-2, 2, 41);
    oracle::Gen gen(17);
    GridFunction f(g.size());
    for (auto& v : f) v = gen.uniform(-1, 1);
    for (double delta : {0.0, 0.1, 0.35, 1.0, 4.0}) {
        double w = 0.0;
        for (int i = 0; i < g.size(); ++i)
            for (int k = 0; k < g.size(); ++k)
                if (std::abs(g.node(i) - g.node(k)) <= delta + 1e-12 && std::abs(g.node(i)) <= 1.0 + 1e-12 &&
                    std::abs(g.node(k)) <= 1.0 + 1e-12)
                    w = std::max(w, std::abs(f[i] - f[k]));
        EXPECT_DOUBLE_EQ(modulus_of_continuity(g, f, {-1.0, 1.0}, delta), w) << delta;
    }
}

TEST(Equicontinuity, SingleDrawIsItsOwnModulus) {
    SpatialGrid g(-6, 6, 241);
    auto b = drifts::tanh_restoring(1.5);
    auto t = equicontinuity_probe({b}, test_function("tanh").f, 0.5, {-5, 5}, {}, g);
    ASSERT_EQ(t.per_draw.size(), 1u);
    for (std::size_t r = 0; r < t.rows.size(); ++r) EXPECT_EQ(t.rows[r].modulus, t.per_draw[0][r]);
    EXPECT_DOUBLE_EQ(t.rows.front().delta, g.spacing());
    EXPECT_LE(t.rows.back().delta, 1.0 + 1e-12);
}

TEST(Equicontinuity, ConstantFunctionHasZeroModulus) {
    SpatialGrid g(-6, 6, 241);
    std::vector<Drift> draws{drifts::tanh_restoring(1.0), drifts::tanh_restoring(2.0)};
    auto t = equicontinuity_probe(draws, [](double) { return 0.7; }, 0.5, {-5, 5}, {0.1, 0.5}, g);
    for (const auto& r : t.rows) EXPECT_NEAR(r.modulus, 0.0, 1e-9);
}

TEST(Equicontinuity, ModulusNondecreasingInDelta) {
    SpatialGrid g(-6, 6, 241);
    oracle::Gen gen(5);
    std::vector<Drift> draws;
    for (int i = 0; i < 5; ++i) draws.push_back(drifts::tanh_restoring(gen.uniform(0.5, 3.0)));
    auto t = equicontinuity_probe(draws, test_function("sin_gauss").f, 0.5, {-5, 5}, {}, g);
    for (std::size_t r = 1; r < t.rows.size(); ++r) EXPECT_GE(t.rows[r].modulus, t.rows[r - 1].modulus);
    EXPECT_GT(t.lipschitz_constant(), 0.0);
    EXPECT_THROW(equicontinuity_probe(draws, test_function("tanh").f, 0.5, {-7, 5}, {}, g), ValidationError);
}

TEST(Martingale, EmptySetGivesZeroTrace) {
    auto c = load_experiment_config(small_config());
    auto cache = std::make_shared<ModelCache>(c.grid, c.delta_t);
    Rng rng(1);
    auto pi0 = invariant_density(c.true_drift, c.grid);
    auto rec = discrete_observations(c.true_drift, pi0, c.delta_t, 30, 0.0, rng);
    LikelihoodContext ctx(rec, cache, c.true_drift);
    // b0 itself never exceeds b0 by a positive threshold.
    auto t = martingale_trace(ctx, {c.true_drift}, c.true_drift, {-0.5, 0.5}, 0.1, test_function("tanh").f,
                              c.nu(), {-4, 4});
    EXPECT_TRUE(t.empty_set);
    EXPECT_EQ(t.members_in_set, 0);
    for (double d : t.d) EXPECT_EQ(d, 0.0);
    for (double m : t.m) EXPECT_EQ(m, 0.0);
}

TEST(Martingale, TraceInvariants) {
    auto c = load_experiment_config(small_config());
    auto cache = std::make_shared<ModelCache>(c.grid, c.delta_t);
    Rng rng(2);
    auto pi0 = invariant_density(c.true_drift, c.grid);
    auto rec = discrete_observations(c.true_drift, pi0, c.delta_t, 50, 0.0, rng);
    LikelihoodContext ctx(rec, cache, c.true_drift);
    std::vector<Drift> sample;
    for (double s : {0.3, 0.6, 1.0, -0.5}) sample.push_back(tail_extend(drifts::ornstein_uhlenbeck(1.0, s), 2.0));
    auto t = martingale_trace(ctx, sample, c.true_drift, {-0.5, 0.5}, 0.05, test_function("tanh").f, c.nu(),
                              {-4, 4});
    EXPECT_FALSE(t.empty_set);
    EXPECT_GT(t.members_in_set, 0);
    EXPECT_LT(t.members_in_set, 4);
    ASSERT_EQ(t.d.size(), 51u);
    EXPECT_EQ(t.occupancy[0], 0);
    EXPECT_EQ(t.occupancy[1], 0);
    for (std::size_t n = 0; n < t.d.size(); ++n) {
        EXPECT_GE(t.d[n], 0.0);
        EXPECT_GE(t.m[n], t.d[n]);
        if (n > 0) EXPECT_GE(t.occupancy[n], t.occupancy[n - 1]);
    }
    EXPECT_GT(t.d[0], 0.0);
    EXPECT_NEAR(t.contraction_k, 1.0 / (128.0 * std::pow(c.nu().mass_of(-4, 4), 2)), 1e-15);
}

TEST(Martingale, AuditShapesAndDeterminism) {
    auto c = load_experiment_config(small_config());
    auto a = supermartingale_audit(c, 9);
    auto b = supermartingale_audit(c, 9);
    ASSERT_EQ(a.traces.size(), 2u);
    EXPECT_EQ(a.mean_increment, b.mean_increment);
    EXPECT_GT(a.invariant_mass, 0.0);
    EXPECT_LT(a.invariant_mass, 1.0);
    for (double f : a.occupancy_fraction) {
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
    }
}

TEST(KlAudit, RowZeroIsSelfComparison) {
    SpatialGrid g(-10, 10, 401);
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    auto prior = shift_family_prior(1.0, 2.0, -0.5, 0.5);
    Rng rng(4);
    auto audit = kl_audit(prior.sampler, b0, 0.5, 5, g, rng);
    ASSERT_EQ(audit.rows.size(), 6u);
    EXPECT_NEAR(audit.rows[0].report.kl_value, 0.0, 1e-12);
    EXPECT_TRUE(audit.rows[0].report.within_bound);
    for (const auto& r : audit.rows) EXPECT_GE(r.report.kl_value, -1e-12);
    EXPECT_DOUBLE_EQ(audit.pass_rate(), 1.0);
}

TEST(PriorMass, EdgeCases) {
    SpatialGrid g(-10, 10, 401);
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    auto pi0 = invariant_density(b0, g);
    auto prior = shift_family_prior(1.0, 2.0, -0.5, 0.5);
    Rng rng(6);
    auto rows = prior_mass_probe(prior.sampler, b0, {0.0, 0.3, 1e6}, 200, pi0, rng);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].hits, 0);
    EXPECT_EQ(rows[0].ci_lo, 0.0);
    EXPECT_GT(rows[1].fraction, 0.0);
    EXPECT_EQ(rows[2].hits, 200);
    EXPECT_EQ(rows[2].ci_hi, 1.0);
    for (const auto& r : rows) {
        EXPECT_LE(r.ci_lo, r.fraction);
        EXPECT_GE(r.ci_hi, r.fraction);
    }
}

TEST(PriorMass, WilsonIntervalMatchesFormula) {
    SpatialGrid g(-10, 10, 401);
    auto b0 = tail_extend(drifts::ornstein_uhlenbeck(), 2.0);
    auto pi0 = invariant_density(b0, g);
    auto prior = shift_family_prior(1.0, 2.0, -0.5, 0.5);
    Rng rng(7);
    auto r = prior_mass_probe(prior.sampler, b0, {0.3}, 100, pi0, rng)[0];
    // Shift c gives L2(mu0) distance |c| away from the tails, so P(d < 0.3) is near 0.6.
    double n = 100, p = r.fraction, z = 1.959963984540054;
    double lo = (p + z * z / (2 * n) - z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n))) / (1 + z * z / n);
    EXPECT_NEAR(r.ci_lo, lo, 1e-12);
    EXPECT_NEAR(r.fraction, 0.6, 0.15);
}
