#include "ergodrift/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ergodrift/errors.hpp"
#include "ergodrift/simulate.hpp"
#include "ergodrift/wavelet.hpp"

namespace ergodrift {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DriftModel build_model(const Drift& b, const SpatialGrid& grid, double delta_t) {
    auto generator = discretize_generator(b, grid);
    // The reflecting chain's own invariant law; equals invariant_density()
    // node for node but skips the coverage check so that every prior draw
    // gets a likelihood on the configured grid.
    auto pi = InvariantDensity::from_log_values(grid, generator.log_weights());
    return {SemigroupSpectrum(generator).kernel(delta_t), std::move(pi)};
}

}  // namespace

std::shared_ptr<const DriftModel> ModelCache::get(const Drift& b) {
    std::uint64_t key = b.fingerprint();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = models_.find(key);
        if (it != models_.end()) return it->second;
    }
    auto model = std::make_shared<const DriftModel>(build_model(b, grid_, delta_t_));
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = models_.emplace(key, model);
    return it->second;
}

std::shared_ptr<const DriftModel> ModelCache::transient(const Drift& b) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = models_.find(b.fingerprint());
        if (it != models_.end()) return it->second;
    }
    return std::make_shared<const DriftModel>(build_model(b, grid_, delta_t_));
}

std::size_t ModelCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return models_.size();
}

LikelihoodContext::LikelihoodContext(ObservationRecord obs, SpatialGrid grid,
                                     std::optional<Drift> reference)
    : LikelihoodContext(std::move(obs), std::make_shared<ModelCache>(grid, 0.0), std::move(reference)) {
}

LikelihoodContext::LikelihoodContext(ObservationRecord obs, std::shared_ptr<ModelCache> cache,
                                     std::optional<Drift> reference)
    : obs_(std::move(obs)), cache_(std::move(cache)), reference_(std::move(reference)) {
    if (obs_.observations.empty()) throw ValidationError("likelihood needs at least X_0");
    if (!(obs_.delta_t > 0.0)) throw ValidationError("likelihood needs delta_t > 0");
    if (cache_->delta_t() == 0.0) cache_ = std::make_shared<ModelCache>(cache_->grid(), obs_.delta_t);
    if (cache_->delta_t() != obs_.delta_t) throw ValidationError("kernel cache delta_t mismatch");
    locate_observations();
}

void LikelihoodContext::locate_observations() {
    const auto& g = cache_->grid();
    locations_.clear();
    locations_.reserve(obs_.observations.size());
    for (double x : obs_.observations) {
        if (!std::isfinite(x)) throw ValidationError("non-finite observation");
        if (!g.contains(x)) {
            double r = 0.0;
            for (double y : obs_.observations) r = std::max(r, std::abs(y));
            throw CoverageError("observation " + std::to_string(x) + " lies outside the grid", 1.1 * r);
        }
        locations_.push_back(g.locate(x));
    }
}

LikelihoodContext LikelihoodContext::prefix(int n) const {
    return LikelihoodContext(obs_.prefix(n), cache_, reference_);
}

std::vector<double> LikelihoodContext::log_terms(const Drift& b, bool store) const {
    auto model = store ? cache_->get(b) : cache_->transient(b);
    const auto& k = model->kernel.matrix();
    const auto& pi = model->invariant.values();
    double h = cache_->grid().spacing();
    auto safe_log = [](double v) {
        double l = v > 0.0 ? std::log(v) : -kInf;
        return l < kLogDensityFloor ? -kInf : l;
    };
    std::vector<double> out;
    out.reserve(locations_.size());
    const auto& l0 = locations_.front();
    out.push_back(safe_log(pi[l0.index] + l0.fraction * (pi[l0.index + 1] - pi[l0.index])));
    for (std::size_t i = 1; i < locations_.size(); ++i) {
        const auto& a = locations_[i - 1];
        const auto& c = locations_[i];
        double t0 = a.fraction, t1 = c.fraction;
        int i0 = a.index, i1 = c.index;
        double p = (1 - t0) * (1 - t1) * k(i0, i1) + (1 - t0) * t1 * k(i0, i1 + 1) +
                   t0 * (1 - t1) * k(i0 + 1, i1) + t0 * t1 * k(i0 + 1, i1 + 1);
        out.push_back(safe_log(p / h));
    }
    return out;
}

double log_likelihood(const LikelihoodContext& ctx, const Drift& b, bool store) {
    double s = 0.0;
    for (double t : ctx.log_terms(b, store)) {
        if (t == -kInf) return -kInf;
        s += t;
    }
    return s;
}

double log_likelihood_ratio(const LikelihoodContext& ctx, const Drift& b) {
    if (!ctx.reference()) throw ValidationError("likelihood ratio needs a reference drift");
    if (ctx.reference()->fingerprint() == b.fingerprint()) return 0.0;
    return log_likelihood(ctx, b) - log_likelihood(ctx, *ctx.reference());
}

DriftEnsemble DriftEnsemble::from_weights(std::vector<Drift> drifts,
                                          const std::vector<double>& raw_weights) {
    if (drifts.empty() || drifts.size() != raw_weights.size()) {
        throw ValidationError("ensemble needs one weight per member");
    }
    double total = 0.0;
    for (double w : raw_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("ensemble weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw NumericFailure("all ensemble weights vanish");
    DriftEnsemble e;
    double sq = 0.0;
    for (std::size_t i = 0; i < drifts.size(); ++i) {
        double w = raw_weights[i] / total;
        sq += w * w;
        e.members.push_back({std::move(drifts[i]), w});
    }
    e.ess = 1.0 / sq;
    e.degenerate = e.ess < 2.0;
    return e;
}

DriftEnsemble DriftEnsemble::from_log_weights(std::vector<Drift> drifts,
                                              const std::vector<double>& log_weights) {
    if (log_weights.empty()) throw ValidationError("ensemble needs at least one member");
    double top = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(top)) throw NumericFailure("all ensemble log-weights are -inf");
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - top);
    return from_weights(std::move(drifts), w);
}

DriftEnsemble posterior_importance(const PriorSampler& prior, const LikelihoodContext& ctx,
                                   int n_draws, Rng& rng) {
    if (n_draws < 1) throw ValidationError("importance sampling needs n_draws >= 1");
    std::vector<Drift> draws;
    std::vector<double> ll;
    draws.reserve(n_draws);
    for (int i = 0; i < n_draws; ++i) {
        draws.push_back(prior(rng));
        ll.push_back(log_likelihood(ctx, draws.back(), false));
    }
    auto e = DriftEnsemble::from_log_weights(std::move(draws), ll);
    e.kind = EnsembleKind::importance;
    e.log_likelihoods = std::move(ll);
    return e;
}

DriftEnsemble posterior_discrete(const NetPriorSpec& prior, const LikelihoodContext& ctx) {
    prior.validate();
    std::vector<Drift> drifts;
    std::vector<double> ll, lw;
    for (const auto& a : prior.atoms) {
        drifts.push_back(a.drift);
        double l = log_likelihood(ctx, a.drift);
        ll.push_back(l);
        lw.push_back(a.probability > 0.0 ? std::log(a.probability) + l : -kInf);
    }
    auto e = DriftEnsemble::from_log_weights(std::move(drifts), lw);
    e.kind = EnsembleKind::importance;
    e.log_likelihoods = std::move(ll);
    return e;
}

namespace {

double reflect(double v, double L) {
    double period = 4.0 * L;
    double y = std::fmod(v + L, period);
    if (y < 0.0) y += period;
    return y <= 2.0 * L ? y - L : 3.0 * L - y;
}

}  // namespace

DriftEnsemble posterior_mcmc(const WaveletPriorSpec& spec, int J, int m,
                             const LogLikelihoodFn& log_lik, const ChainConfig& cfg, Rng& rng,
                             std::vector<std::vector<double>>* raw_chain,
                             const CoefficientLayout* layout_in) {
    spec.validate();
    if (cfg.iterations < 1 || cfg.burn_in < 0 || cfg.thin < 1 || cfg.adapt_interval < 1 ||
        !(cfg.initial_scale > 0.0) || !(cfg.target_acceptance > 0.0 && cfg.target_acceptance < 1.0)) {
        throw ValidationError("invalid chain configuration");
    }
    if (m < 1) throw ValidationError("mcmc needs m >= 1");
    CoefficientLayout layout = layout_in ? *layout_in : coefficient_layout(*spec.system, J, m + 1.0);
    std::size_t dim = layout.dimension();
    double L = spec.L;

    auto make_drift = [&](const std::vector<double>& theta) {
        return wavelet_drift(spec.system, assemble_coefficients(layout, theta, spec.s, L), m);
    };
    auto log_prior = [&](const std::vector<double>& theta) {
        double s = 0.0;
        for (double v : theta) s += coefficient_log_density(spec, v);
        return s;
    };

    std::vector<double> theta(dim);
    for (double& v : theta) v = draw_coefficient(spec, rng);
    Drift current = make_drift(theta);
    double cur_ll = log_lik(current);
    double cur_lp = log_prior(theta);
    double scale = cfg.initial_scale * L;

    DriftEnsemble e;
    e.kind = EnsembleKind::mcmc;
    int window_accepts = 0, kept_accepts = 0, kept_steps = 0;
    int total = cfg.burn_in + cfg.iterations * cfg.thin;
    std::vector<double> proposal(dim);
    for (int it = 1; it <= total; ++it) {
        for (std::size_t i = 0; i < dim; ++i) proposal[i] = reflect(theta[i] + scale * rng.normal(), L);
        Drift cand = make_drift(proposal);
        double ll = log_lik(cand);
        double lp = log_prior(proposal);
        double log_ratio = (ll + lp) - (cur_ll + cur_lp);
        bool accept = false;
        if (ll != -kInf) {
            accept = cur_ll == -kInf || log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
        }
        if (accept) {
            theta = proposal;
            current = std::move(cand);
            cur_ll = ll;
            cur_lp = lp;
        }
        if (it <= cfg.burn_in) {
            window_accepts += accept;
            if (it % cfg.adapt_interval == 0) {
                double rate = static_cast<double>(window_accepts) / cfg.adapt_interval;
                scale = std::min(scale * std::exp(rate - cfg.target_acceptance), 4.0 * L);
                window_accepts = 0;
            }
            continue;
        }
        kept_accepts += accept;
        ++kept_steps;
        if ((it - cfg.burn_in) % cfg.thin == 0) {
            e.members.push_back({current, 0.0});
            e.log_likelihoods.push_back(cur_ll);
            if (raw_chain) raw_chain->push_back(theta);
        }
    }
    double w = 1.0 / static_cast<double>(e.members.size());
    for (auto& mbr : e.members) mbr.weight = w;
    e.acceptance_rate = kept_steps ? static_cast<double>(kept_accepts) / kept_steps : 0.0;
    e.ess = static_cast<double>(e.members.size());
    return e;
}

DriftEnsemble posterior_mcmc(const WaveletPriorSpec& spec, int J, int m, const LikelihoodContext& ctx,
                             const ChainConfig& cfg, Rng& rng) {
    return posterior_mcmc(
        spec, J, m, [&ctx](const Drift& b) { return log_likelihood(ctx, b, false); }, cfg, rng);
}

double posterior_probability(const DriftEnsemble& e, const std::function<bool(const Drift&)>& pred) {
    if (e.members.empty()) throw ValidationError("posterior_probability on an empty ensemble");
    double s = 0.0;
    for (const auto& m : e.members) {
        if (pred(m.drift)) s += m.weight;
    }
    return std::clamp(s, 0.0, 1.0);
}

double l2_mu0_distance(const Drift& b, const Drift& b0, const InvariantDensity& pi0) {
    const auto& g = pi0.grid();
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        double x = g.node(i);
        double d = b(x) - b0(x);
        s += d * d * pi0.values()[i];
    }
    return std::sqrt(s * g.spacing());
}

double hellinger_affinity(const TransitionKernel& k1, const TransitionKernel& k2, int row) {
    if (!(k1.grid() == k2.grid()) || k1.delta_t() != k2.delta_t()) {
        throw ValidationError("hellinger_affinity: kernels differ in grid or delta_t");
    }
    if (row < 0 || row >= k1.size()) throw ValidationError("hellinger_affinity: row out of range");
    return (k1.matrix().row(row).array() * k2.matrix().row(row).array()).sqrt().sum();
}

KLReport kl_divergence(const DriftModel& m0, const Drift& b0, const DriftModel& m, const Drift& b) {
    const auto& k0 = m0.kernel.matrix();
    const auto& k = m.kernel.matrix();
    if (!(m0.kernel.grid() == m.kernel.grid()) || m0.kernel.delta_t() != m.kernel.delta_t()) {
        throw ValidationError("kl_divergence: models differ in grid or delta_t");
    }
    auto pi0 = m0.invariant.cell_masses();
    KLReport r;
    double kl = 0.0, hell = 0.0;
    for (Eigen::Index i = 0; i < k0.rows(); ++i) {
        double row = 0.0, aff = 0.0;
        for (Eigen::Index j = 0; j < k0.cols(); ++j) {
            double p = k0(i, j), q = k(i, j);
            row += p * std::log(p / q);
            aff += std::sqrt(p * q);
        }
        kl += pi0[i] * row;
        hell += pi0[i] * (2.0 - 2.0 * aff);
    }
    r.kl_value = kl;
    r.hellinger_sq_avg = std::clamp(hell, 0.0, 2.0);
    r.l2_mu0 = l2_mu0_distance(b, b0, m0.invariant);
    r.upper_bound = 0.5 * m0.kernel.delta_t() * r.l2_mu0 * r.l2_mu0;
    r.within_bound = r.kl_value <= r.upper_bound * 1.05 + 1e-6;
    return r;
}

KLReport kl_divergence(const Drift& b0, const Drift& b, double delta_t, const SpatialGrid& grid) {
    ModelCache cache(grid, delta_t);
    auto m0 = cache.get(b0);
    auto m = cache.get(b);
    return kl_divergence(*m0, b0, *m, b);
}

void write_ensemble_csv(const DriftEnsemble& e, const std::string& path, const std::string& coefficient_dir) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << "member,weight,log_likelihood,label,fingerprint,sup_bound,support_radius,coefficient_file\n";
    for (std::size_t i = 0; i < e.members.size(); ++i) {
        const auto& b = e.members[i].drift;
        std::string file;
        const auto* w = std::get_if<WaveletRepr>(&b.representation());
        if (w && !coefficient_dir.empty()) {
            file = "member_" + std::to_string(i) + ".csv";
            std::filesystem::create_directories(coefficient_dir);
            write_coefficients_csv(*w->coefficients, (std::filesystem::path(coefficient_dir) / file).string());
        }
        double ll = i < e.log_likelihoods.size() ? e.log_likelihoods[i] : std::nan("");
        out << i << ',' << format_real(e.members[i].weight) << ',' << format_real(ll) << ',' << b.label() << ','
            << b.fingerprint() << ',' << format_real(b.sup_bound()) << ',' << format_real(b.support_radius())
            << ',' << file << '\n';
    }
}

}  // namespace ergodrift
