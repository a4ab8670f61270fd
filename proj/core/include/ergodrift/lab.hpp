#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/posterior.hpp"
#include "ergodrift/simulate.hpp"
#include "ergodrift/specs.hpp"
#include "ergodrift/transition.hpp"

namespace ergodrift {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

struct KlAuditSettings {
    int n_pairs = 100;
};

struct EquicontinuitySettings {
    int n_draws = 200;
    std::string test_function = "tanh";
    Interval compact{-5.0, 5.0};
    std::vector<double> deltas;  ///< empty: h, 2h, 4h, ... up to 1
};

struct MartingaleSettings {
    Interval region{-0.5, 0.5};
    Interval compact{-4.0, 4.0};
    double epsilon = 0.1;
    std::string test_function = "tanh";
    int n = 5000;
    int replications = 20;
    int prior_sample_size = 64;
};

struct PriorMassSettings {
    std::vector<double> epsilons{0.25, 0.5, 1.0, 2.0};
    int n_draws = 10000;
};

/// Everything a CLI run needs; loaded from a JSON document.
struct ExperimentConfig {
    nlohmann::json raw;
    Drift true_drift = drifts::zero();
    Prior prior;
    double delta_t = 0.5;
    std::vector<int> n_schedule{100, 500, 2000};
    SpatialGrid grid{-6.0, 6.0, 601};
    std::vector<std::string> test_functions{"tanh"};
    double nu_mean = 0.0;
    double nu_sd = 1.0;
    std::vector<double> epsilons{0.1};
    int replications = 20;
    int importance_draws = 200;
    ChainConfig chain;
    std::string posterior_method = "auto";  ///< auto | importance | mcmc
    int mcmc_J = 1;                         ///< fixed resolution for mcmc fits
    int mcmc_m = 2;                         ///< fixed tail radius for mcmc fits
    double fine_step_ratio = 200.0;
    std::string generator = "euler";        ///< euler | grid_chain
    int workers = 1;
    KlAuditSettings kl;
    EquicontinuitySettings equicontinuity;
    MartingaleSettings martingale;
    PriorMassSettings prior_mass;

    FiniteMeasure nu() const { return FiniteMeasure::gaussian(grid, nu_mean, nu_sd); }
    void validate() const;
};

ExperimentConfig load_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config_file(const std::string& path);

/// Grid covering b's invariant law to the 1e-12 truncation rule, spacing <= max_spacing.
SpatialGrid auto_grid(const Drift& b, double max_spacing, double min_radius = 0.0);

/// Runs fn(i) for i in [0, n) on `workers` threads; results must go to
/// preallocated per-index slots. Exceptions are rethrown after all jobs stop.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// n + 1 observations from cfg.true_drift using cfg.generator.
ObservationRecord generate_record(const ExperimentConfig& cfg, ModelCache& cache, int n, Rng& rng);

/// Posterior ensemble per cfg.posterior_method: exact for discrete priors under
/// auto, else importance sampling or MCMC.
DriftEnsemble fit_posterior(const ExperimentConfig& cfg, const LikelihoodContext& ctx, Rng& rng);

// ---------------------------------------------------------------- consistency

struct ConsistencyRow {
    int replication = 0;
    std::uint64_t seed = 0;
    int n = 0;
    std::string test_function;
    double epsilon = 0.0;
    double complement_mass = 0.0;
    double ess = 0.0;
    int chain_length = 0;
};

struct ConsistencySummaryRow {
    int n = 0;
    std::string test_function;
    double epsilon = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct ConsistencyCurve {
    std::vector<ConsistencyRow> rows;
    std::vector<ConsistencySummaryRow> summary() const;
};

/// Posterior mass of {b : weak_distance(b, b0, f, nu, Delta) > eps} for every n
/// in the schedule, replication and (f, eps). Data for smaller n are prefixes of
/// the largest record within a replication.
ConsistencyCurve run_consistency_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

void write_consistency_csv(const ConsistencyCurve& c, const std::string& path);
void write_consistency_summary_csv(const ConsistencyCurve& c, const std::string& path);

// ------------------------------------------------------------ equicontinuity

struct ModulusRow {
    double delta = 0.0;
    double modulus = 0.0;
};

struct EquicontinuityTable {
    std::vector<ModulusRow> rows;
    std::vector<std::vector<double>> per_draw;  ///< per_draw[d][r]: draw d at rows[r].delta
    /// max_r modulus / delta; the Lipschitz constant shared by the ensemble.
    double lipschitz_constant() const;
};

/// Modulus of continuity of a grid function on the nodes inside K, for |x - y| <= delta.
double modulus_of_continuity(const SpatialGrid& grid, const GridFunction& g, Interval compact,
                             double delta);

/// omega(delta) = max over draws of the modulus of P^b_Delta f on K.
EquicontinuityTable equicontinuity_probe(const PriorSampler& prior, int n_draws,
                                         const std::function<double(double)>& f, double delta_t,
                                         Interval compact, std::vector<double> deltas,
                                         const SpatialGrid& grid, Rng& rng);
EquicontinuityTable equicontinuity_probe(const std::vector<Drift>& draws,
                                         const std::function<double(double)>& f, double delta_t,
                                         Interval compact, std::vector<double> deltas,
                                         const SpatialGrid& grid);

void write_equicontinuity_csv(const EquicontinuityTable& t, const std::string& path);

// ---------------------------------------------------------------- martingale

struct MartingaleTrace {
    std::string predicate;
    std::vector<double> d;          ///< D_n, n = 0..N
    std::vector<double> m;          ///< M_n
    std::vector<double> log_d;
    std::vector<int> occupancy;     ///< sum_{i=1}^{n-1} 1{X_i in I}, n = 0..N
    int members_in_set = 0;         ///< prior sample members inside B+
    int prior_sample_size = 0;
    double contraction_k = 0.0;     ///< k = 1 / (128 nu(K)^2)
    double threshold = 0.0;         ///< eps / (4 nu(K))
    bool empty_set = false;
};

/// D_n = sqrt(mean over the prior sample of 1{b in B+} L_n(b)) with
/// B+ = {b : P^b f - P^{b0} f > eps / (4 nu(K)) on every node of I} and
/// M_n = D_n (1 - k eps^2)^{-occupancy}.
MartingaleTrace martingale_trace(const LikelihoodContext& ctx, const std::vector<Drift>& prior_sample,
                                 const Drift& b0, Interval region, double epsilon,
                                 const std::function<double(double)>& f, const FiniteMeasure& nu,
                                 Interval compact);

struct SupermartingaleAudit {
    std::vector<MartingaleTrace> traces;
    std::vector<double> mean_increment_per_replication;  ///< (M_N - M_0) / N
    double mean_increment = 0.0;
    double standard_error = 0.0;
    std::vector<double> occupancy_fraction;  ///< per replication, at n = N
    double occupancy_mean = 0.0;
    double invariant_mass = 0.0;             ///< mu_{b0}(I)
    bool increments_pass() const noexcept { return mean_increment <= 2.0 * standard_error; }
    bool occupancy_pass(double tol = 0.03) const noexcept;
};

SupermartingaleAudit supermartingale_audit(const ExperimentConfig& cfg, std::uint64_t seed);

void write_martingale_csv(const SupermartingaleAudit& audit, const std::string& path);
void write_martingale_summary_csv(const SupermartingaleAudit& audit, const std::string& path);

// ------------------------------------------------------------------- KL audit

struct KlAuditRow {
    int pair = 0;
    KLReport report;
};

struct KlAudit {
    std::vector<KlAuditRow> rows;
    double pass_rate() const;
};

/// Row 0 compares b0 with itself; rows 1..n_pairs use prior draws.
KlAudit kl_audit(const PriorSampler& prior, const Drift& b0, double delta_t, int n_pairs,
                 const SpatialGrid& grid, Rng& rng, int workers = 1);

void write_kl_audit_csv(const KlAudit& audit, const std::string& path);

// ----------------------------------------------------------------- prior mass

struct PriorMassRow {
    double epsilon = 0.0;
    int hits = 0;
    int draws = 0;
    double fraction = 0.0;
    double ci_lo = 0.0;  ///< Wilson 95% interval
    double ci_hi = 0.0;
};

std::vector<PriorMassRow> prior_mass_probe(const PriorSampler& prior, const Drift& b0,
                                           const std::vector<double>& epsilons, int n_draws,
                                           const InvariantDensity& pi0, Rng& rng);

void write_prior_mass_csv(const std::vector<PriorMassRow>& rows, const std::string& path);

}  // namespace ergodrift
