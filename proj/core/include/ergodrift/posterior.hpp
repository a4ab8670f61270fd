#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/drift.hpp"
#include "ergodrift/priors.hpp"
#include "ergodrift/rng.hpp"
#include "ergodrift/simulate.hpp"
#include "ergodrift/transition.hpp"

namespace ergodrift {

/// Log densities below this are reported as -inf (impossible transitions).
inline constexpr double kLogDensityFloor = -690.0;

/// Kernel and invariant density of one drift on one grid.
struct DriftModel {
    TransitionKernel kernel;
    InvariantDensity invariant;
};

/// Thread-safe cache of DriftModel keyed by drift fingerprint.
class ModelCache {
public:
    ModelCache(SpatialGrid grid, double delta_t) : grid_(grid), delta_t_(delta_t) {}

    std::shared_ptr<const DriftModel> get(const Drift& b);
    /// Cached model if present, otherwise a freshly built one that is not stored.
    /// For one-off drifts such as MCMC proposals.
    std::shared_ptr<const DriftModel> transient(const Drift& b) const;
    const SpatialGrid& grid() const noexcept { return grid_; }
    double delta_t() const noexcept { return delta_t_; }
    std::size_t size() const;

private:
    SpatialGrid grid_;
    double delta_t_;
    mutable std::mutex mutex_;
    std::map<std::uint64_t, std::shared_ptr<const DriftModel>> models_;
};

/// Observations, grid and kernel cache for repeated likelihood evaluation.
class LikelihoodContext {
public:
    /// Throws CoverageError if an observation lies outside the grid.
    LikelihoodContext(ObservationRecord obs, SpatialGrid grid,
                      std::optional<Drift> reference = std::nullopt);
    /// Shares `cache` (and its grid and delta_t) with other contexts.
    LikelihoodContext(ObservationRecord obs, std::shared_ptr<ModelCache> cache,
                      std::optional<Drift> reference = std::nullopt);

    const ObservationRecord& observations() const noexcept { return obs_; }
    const SpatialGrid& grid() const noexcept { return cache_->grid(); }
    const std::optional<Drift>& reference() const noexcept { return reference_; }
    std::shared_ptr<const DriftModel> model(const Drift& b) const { return cache_->get(b); }

    /// log pi_b(X_0) followed by log p_b(Delta, X_{i-1}, X_i), i = 1..n.
    std::vector<double> log_terms(const Drift& b, bool store = true) const;

    /// Same context restricted to the first n transitions (shares the kernel cache).
    LikelihoodContext prefix(int n) const;

    std::shared_ptr<ModelCache> cache() const noexcept { return cache_; }

private:
    void locate_observations();

    ObservationRecord obs_;
    std::shared_ptr<ModelCache> cache_;
    std::optional<Drift> reference_;
    std::vector<SpatialGrid::Location> locations_;
};

/// log pi_b(X_0) + sum_i log p_b(Delta, X_{i-1}, X_i) with bilinear interpolation
/// of the kernel density surface; -inf if a density underflows the floor.
/// `store = false` skips inserting the model into the cache (one-off drifts).
double log_likelihood(const LikelihoodContext& ctx, const Drift& b, bool store = true);
/// log L_n(b) relative to the context's reference drift.
double log_likelihood_ratio(const LikelihoodContext& ctx, const Drift& b);

enum class EnsembleKind { importance, mcmc };

struct EnsembleMember {
    Drift drift;
    double weight;
};

/// Finite approximation of a posterior (or prior) over drifts.
struct DriftEnsemble {
    EnsembleKind kind = EnsembleKind::importance;
    std::vector<EnsembleMember> members;
    std::vector<double> log_likelihoods;
    double ess = 0.0;
    double acceptance_rate = 0.0;  ///< mcmc only
    bool degenerate = false;       ///< importance ESS < 2

    /// Members with weights proportional to `raw_weights` (normalized here).
    static DriftEnsemble from_weights(std::vector<Drift> drifts, const std::vector<double>& raw_weights);
    /// Members with weights proportional to exp(log_weights).
    static DriftEnsemble from_log_weights(std::vector<Drift> drifts, const std::vector<double>& log_weights);
};

using PriorSampler = std::function<Drift(Rng&)>;
using LogLikelihoodFn = std::function<double(const Drift&)>;

/// Self-normalized importance sampling with the prior as proposal.
DriftEnsemble posterior_importance(const PriorSampler& prior, const LikelihoodContext& ctx,
                                   int n_draws, Rng& rng);
/// Exact posterior of a discrete prior.
DriftEnsemble posterior_discrete(const NetPriorSpec& prior, const LikelihoodContext& ctx);

struct ChainConfig {
    int iterations = 2000;       ///< post burn-in samples kept
    int burn_in = 500;
    int thin = 1;
    double initial_scale = 0.25; ///< proposal sd as a fraction of L
    double target_acceptance = 0.3;
    int adapt_interval = 50;
};

/// Random-walk Metropolis on the raw coefficient vector (V_k, U_{j,k}) of a
/// wavelet prior with fixed (J, m); proposals reflect at +-L. The proposal scale
/// adapts during burn-in only.
DriftEnsemble posterior_mcmc(const WaveletPriorSpec& spec, int J, int m,
                             const LogLikelihoodFn& log_lik, const ChainConfig& cfg, Rng& rng,
                             std::vector<std::vector<double>>* raw_chain = nullptr,
                             const CoefficientLayout* layout = nullptr);
DriftEnsemble posterior_mcmc(const WaveletPriorSpec& spec, int J, int m,
                             const LikelihoodContext& ctx, const ChainConfig& cfg, Rng& rng);

/// Weight (importance) or chain fraction (mcmc) of members satisfying pred.
double posterior_probability(const DriftEnsemble& e, const std::function<bool(const Drift&)>& pred);

struct KLReport {
    double kl_value = 0.0;
    double upper_bound = 0.0;   ///< (Delta / 2) ||b - b0||^2_{2, mu0}
    double l2_mu0 = 0.0;
    double hellinger_sq_avg = 0.0;
    bool within_bound = false;  ///< kl <= upper * 1.05 + 1e-6
};

/// KL(b0, b) = sum_i pi0_i sum_j K0_ij log(K0_ij / K_ij) on the grid.
KLReport kl_divergence(const Drift& b0, const Drift& b, double delta_t, const SpatialGrid& grid);
KLReport kl_divergence(const DriftModel& m0, const Drift& b0, const DriftModel& m, const Drift& b);

/// Columns member,weight,log_likelihood,label,fingerprint,sup_bound,support_radius,coefficient_file.
/// When coefficient_dir is non-empty, wavelet members also get member_<i>.csv there.
/// For mcmc ensembles `member` is the chain index.
void write_ensemble_csv(const DriftEnsemble& e, const std::string& path,
                        const std::string& coefficient_dir = {});

/// sqrt(sum_i (b - b0)^2(x_i) pi0(x_i) h).
double l2_mu0_distance(const Drift& b, const Drift& b0, const InvariantDensity& pi0);

/// A(p, q) = sum_j sqrt(K1_ij K2_ij) for row i.
double hellinger_affinity(const TransitionKernel& k1, const TransitionKernel& k2, int row);

}  // namespace ergodrift
