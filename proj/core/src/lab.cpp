#include "ergodrift/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "ergodrift/errors.hpp"

namespace ergodrift {
namespace {

using json = nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::ofstream open_csv(const std::string& path, const char* header) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << header << '\n';
    return out;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

Interval interval_from_json(const json& j, Interval fallback) {
    if (j.is_null()) return fallback;
    auto v = j.get<std::vector<double>>();
    if (v.size() != 2 || !(v[0] < v[1])) throw ValidationError("interval must be [lo, hi] with lo < hi");
    return {v[0], v[1]};
}

SpatialGrid grid_from_json(const json& j, const Drift& b) {
    if (j.is_null()) return SpatialGrid(-6.0, 6.0, 601);
    if (j.value("auto", false)) {
        return auto_grid(b, j.value("max_spacing", 0.05), j.value("min_radius", 0.0));
    }
    int n = j.at("n_points").get<int>();
    if (j.contains("radius")) return SpatialGrid::symmetric(j.at("radius").get<double>(), n);
    return SpatialGrid(j.at("lo").get<double>(), j.at("hi").get<double>(), n);
}

GridFunction grid_test_function(const SpatialGrid& grid, const std::string& id) {
    auto f = sample_on(grid, test_function(id).f);
    require_test_function_bound(f);
    return f;
}

}  // namespace

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mutex;
    std::exception_ptr error;
    int error_index = n;
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SpatialGrid auto_grid(const Drift& b, double max_spacing, double min_radius) {
    if (!(max_spacing > 0.0)) throw ValidationError("auto grid needs max_spacing > 0");
    double r = suggest_truncation(b);
    if (!std::isfinite(r)) throw CoverageError("drift has no finite truncation radius", r);
    r = std::max(r, min_radius);
    auto grid = SpatialGrid::with_spacing(r, max_spacing);
    double sup = b.sup_on(grid);
    if (grid.spacing() * sup >= 0.9) grid = SpatialGrid::with_spacing(r, 0.9 / sup);
    return grid;
}

void ExperimentConfig::validate() const {
    if (!(delta_t > 0.0)) throw ValidationError("delta_t must be > 0");
    if (n_schedule.empty()) throw ValidationError("n_schedule must not be empty");
    for (std::size_t i = 0; i < n_schedule.size(); ++i) {
        if (n_schedule[i] < 1 || (i > 0 && n_schedule[i] <= n_schedule[i - 1])) {
            throw ValidationError("n_schedule must be strictly increasing and >= 1");
        }
    }
    for (double e : epsilons) {
        if (!(e > 0.0)) throw ValidationError("epsilons must be > 0");
    }
    for (const auto& id : test_functions) test_function(id);
    test_function(equicontinuity.test_function);
    test_function(martingale.test_function);
    if (replications < 1 || importance_draws < 1 || workers < 1) {
        throw ValidationError("replications, importance_draws and workers must be >= 1");
    }
    if (posterior_method != "auto" && posterior_method != "importance" && posterior_method != "mcmc") {
        throw ValidationError("posterior_method must be auto, importance or mcmc");
    }
    if (posterior_method == "mcmc" && !prior.wavelet) {
        throw ValidationError("posterior_method mcmc needs a wavelet prior");
    }
    if (generator != "euler" && generator != "grid_chain") {
        throw ValidationError("generator must be euler or grid_chain");
    }
    if (!(fine_step_ratio >= 1.0)) throw ValidationError("fine_step_ratio must be >= 1");
    if (!(nu_sd > 0.0)) throw ValidationError("nu sd must be > 0");
    if (!prior.sampler) throw ValidationError("config needs a prior");
    if (kl.n_pairs < 1 || equicontinuity.n_draws < 1 || martingale.n < 2 ||
        martingale.replications < 2 || martingale.prior_sample_size < 1 || prior_mass.n_draws < 1) {
        throw ValidationError("audit sizes out of range");
    }
    if (!(martingale.epsilon > 0.0)) throw ValidationError("martingale epsilon must be > 0");
}

ExperimentConfig load_experiment_config(const json& j) {
    try {
        ExperimentConfig c;
        c.raw = j;
        c.true_drift = drift_from_json(j.at("true_drift"));
        c.prior = prior_from_json(j.at("prior"));
        c.delta_t = j.value("delta_t", c.delta_t);
        c.n_schedule = j.value("n_schedule", c.n_schedule);
        c.grid = grid_from_json(j.value("grid", json()), c.true_drift);
        c.test_functions = j.value("test_functions", c.test_functions);
        if (j.contains("nu")) {
            c.nu_mean = j["nu"].value("mean", c.nu_mean);
            c.nu_sd = j["nu"].value("sd", c.nu_sd);
        }
        c.epsilons = j.value("epsilons", c.epsilons);
        c.replications = j.value("replications", c.replications);
        c.importance_draws = j.value("importance_draws", c.importance_draws);
        if (j.contains("chain")) {
            const auto& ch = j["chain"];
            c.chain.iterations = ch.value("iterations", c.chain.iterations);
            c.chain.burn_in = ch.value("burn_in", c.chain.burn_in);
            c.chain.thin = ch.value("thin", c.chain.thin);
            c.chain.initial_scale = ch.value("initial_scale", c.chain.initial_scale);
            c.chain.target_acceptance = ch.value("target_acceptance", c.chain.target_acceptance);
            c.chain.adapt_interval = ch.value("adapt_interval", c.chain.adapt_interval);
            c.mcmc_J = ch.value("J", c.mcmc_J);
            c.mcmc_m = ch.value("m", c.mcmc_m);
        }
        c.posterior_method = j.value("posterior_method", c.posterior_method);
        c.fine_step_ratio = j.value("fine_step_ratio", c.fine_step_ratio);
        c.generator = j.value("generator", c.generator);
        c.workers = j.value("workers", c.workers);
        if (j.contains("kl_audit")) c.kl.n_pairs = j["kl_audit"].value("n_pairs", c.kl.n_pairs);
        if (j.contains("equicontinuity")) {
            const auto& e = j["equicontinuity"];
            c.equicontinuity.n_draws = e.value("n_draws", c.equicontinuity.n_draws);
            c.equicontinuity.test_function = e.value("test_function", c.equicontinuity.test_function);
            c.equicontinuity.compact = interval_from_json(e.value("compact", json()), c.equicontinuity.compact);
            c.equicontinuity.deltas = e.value("deltas", c.equicontinuity.deltas);
        }
        if (j.contains("martingale")) {
            const auto& m = j["martingale"];
            c.martingale.region = interval_from_json(m.value("region", json()), c.martingale.region);
            c.martingale.compact = interval_from_json(m.value("compact", json()), c.martingale.compact);
            c.martingale.epsilon = m.value("epsilon", c.martingale.epsilon);
            c.martingale.test_function = m.value("test_function", c.martingale.test_function);
            c.martingale.n = m.value("n", c.martingale.n);
            c.martingale.replications = m.value("replications", c.martingale.replications);
            c.martingale.prior_sample_size = m.value("prior_sample_size", c.martingale.prior_sample_size);
        }
        if (j.contains("prior_mass")) {
            c.prior_mass.epsilons = j["prior_mass"].value("epsilons", c.prior_mass.epsilons);
            c.prior_mass.n_draws = j["prior_mass"].value("n_draws", c.prior_mass.n_draws);
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("experiment config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return load_experiment_config(j);
}

// ---------------------------------------------------------------- consistency

std::vector<ConsistencySummaryRow> ConsistencyCurve::summary() const {
    std::vector<ConsistencySummaryRow> out;
    std::vector<std::vector<double>> groups;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ConsistencySummaryRow& s) {
            return s.n == r.n && s.test_function == r.test_function && s.epsilon == r.epsilon;
        });
        if (it == out.end()) {
            out.push_back({r.n, r.test_function, r.epsilon, 0.0, 0.0, 0.0});
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[it - out.begin()].push_back(r.complement_mass);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].median = quantile(groups[i], 0.5);
        out[i].q25 = quantile(groups[i], 0.25);
        out[i].q75 = quantile(groups[i], 0.75);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.n < b.n; });
    return out;
}

ObservationRecord generate_record(const ExperimentConfig& cfg, ModelCache& cache, int n, Rng& rng) {
    if (cfg.generator == "grid_chain") {
        auto model = cache.get(cfg.true_drift);
        auto rec = grid_chain_observations(model->kernel, model->invariant, n, rng);
        rec.provenance.drift_label = cfg.true_drift.label();
        rec.provenance.drift_fingerprint = cfg.true_drift.fingerprint();
        return rec;
    }
    auto pi0 = invariant_density(cfg.true_drift, cfg.grid);
    return discrete_observations(cfg.true_drift, pi0, cfg.delta_t, n, cfg.delta_t / cfg.fine_step_ratio,
                                 rng);
}

DriftEnsemble fit_posterior(const ExperimentConfig& cfg, const LikelihoodContext& ctx, Rng& rng) {
    bool mcmc = cfg.posterior_method == "mcmc";
    if (!mcmc && cfg.prior.is_discrete() && cfg.posterior_method == "auto") {
        return posterior_discrete(*cfg.prior.net, ctx);
    }
    if (mcmc) return posterior_mcmc(*cfg.prior.wavelet, cfg.mcmc_J, cfg.mcmc_m, ctx, cfg.chain, rng);
    return posterior_importance(cfg.prior.sampler, ctx, cfg.importance_draws, rng);
}

ConsistencyCurve run_consistency_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    auto cache = std::make_shared<ModelCache>(cfg.grid, cfg.delta_t);
    auto nu = cfg.nu();
    std::vector<GridFunction> fs;
    for (const auto& id : cfg.test_functions) fs.push_back(grid_test_function(cfg.grid, id));
    std::vector<GridFunction> p0f;
    {
        auto m0 = cache->get(cfg.true_drift);
        for (const auto& f : fs) p0f.push_back(apply_operator(m0->kernel, f));
    }
    Rng root(seed);
    std::vector<std::vector<ConsistencyRow>> slots(cfg.replications);
    parallel_for(cfg.replications, cfg.workers, [&](int r) {
        Rng rep = root.split(static_cast<std::uint64_t>(r));
        Rng data_rng = rep.split(0);
        auto record = generate_record(cfg, *cache, cfg.n_schedule.back(), data_rng);
        LikelihoodContext full(record, cache, cfg.true_drift);
        std::map<std::uint64_t, std::vector<double>> distances;
        for (std::size_t ni = 0; ni < cfg.n_schedule.size(); ++ni) {
            int n = cfg.n_schedule[ni];
            Rng post_rng = rep.split(1 + ni);
            auto ctx = full.prefix(n);
            auto ens = fit_posterior(cfg, ctx, post_rng);
            for (const auto& mbr : ens.members) {
                auto key = mbr.drift.fingerprint();
                if (distances.count(key)) continue;
                auto model = cache->transient(mbr.drift);
                std::vector<double> d;
                for (std::size_t fi = 0; fi < fs.size(); ++fi) {
                    d.push_back(key == cfg.true_drift.fingerprint()
                                    ? 0.0
                                    : weak_distance(apply_operator(model->kernel, fs[fi]), p0f[fi], nu));
                }
                distances.emplace(key, std::move(d));
            }
            for (std::size_t fi = 0; fi < fs.size(); ++fi) {
                for (double eps : cfg.epsilons) {
                    ConsistencyRow row;
                    row.replication = r;
                    row.seed = rep.seed();
                    row.n = n;
                    row.test_function = cfg.test_functions[fi];
                    row.epsilon = eps;
                    row.complement_mass = posterior_probability(ens, [&](const Drift& b) {
                        return distances.at(b.fingerprint())[fi] > eps;
                    });
                    row.ess = ens.ess;
                    row.chain_length = ens.kind == EnsembleKind::mcmc ? static_cast<int>(ens.members.size()) : 0;
                    slots[r].push_back(row);
                }
            }
        }
    });
    ConsistencyCurve curve;
    for (auto& s : slots) curve.rows.insert(curve.rows.end(), s.begin(), s.end());
    return curve;
}

void write_consistency_csv(const ConsistencyCurve& c, const std::string& path) {
    auto out = open_csv(path, "replication,seed,n,test_function,epsilon,complement_mass,ess,chain_length");
    for (const auto& r : c.rows) {
        out << r.replication << ',' << r.seed << ',' << r.n << ',' << r.test_function << ','
            << format_real(r.epsilon) << ',' << format_real(r.complement_mass) << ','
            << format_real(r.ess) << ',' << r.chain_length << '\n';
    }
}

void write_consistency_summary_csv(const ConsistencyCurve& c, const std::string& path) {
    auto out = open_csv(path, "n,test_function,epsilon,median,q25,q75");
    for (const auto& s : c.summary()) {
        out << s.n << ',' << s.test_function << ',' << format_real(s.epsilon) << ','
            << format_real(s.median) << ',' << format_real(s.q25) << ',' << format_real(s.q75) << '\n';
    }
}

// ------------------------------------------------------------ equicontinuity

double EquicontinuityTable::lipschitz_constant() const {
    double c = 0.0;
    for (const auto& r : rows) {
        if (r.delta > 0.0) c = std::max(c, r.modulus / r.delta);
    }
    return c;
}

double modulus_of_continuity(const SpatialGrid& grid, const GridFunction& g, Interval compact,
                             double delta) {
    if (static_cast<int>(g.size()) != grid.size()) throw ValidationError("modulus: size mismatch");
    double slack = 1e-9 * grid.spacing();
    double w = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        if (!compact.contains(grid.node(i))) continue;
        for (int j = i + 1; j < grid.size(); ++j) {
            double xj = grid.node(j);
            if (!compact.contains(xj) || xj - grid.node(i) > delta + slack) break;
            w = std::max(w, std::abs(g[j] - g[i]));
        }
    }
    return w;
}

EquicontinuityTable equicontinuity_probe(const std::vector<Drift>& draws,
                                         const std::function<double(double)>& f, double delta_t,
                                         Interval compact, std::vector<double> deltas,
                                         const SpatialGrid& grid) {
    if (draws.empty()) throw ValidationError("equicontinuity probe needs at least one draw");
    if (compact.lo < grid.lo() || compact.hi > grid.hi()) {
        throw ValidationError("compact set must lie inside the grid");
    }
    if (deltas.empty()) {
        for (double d = grid.spacing(); d <= 1.0 + 1e-12; d *= 2.0) deltas.push_back(d);
    }
    std::sort(deltas.begin(), deltas.end());
    auto fg = sample_on(grid, f);
    require_test_function_bound(fg);
    EquicontinuityTable t;
    for (double d : deltas) t.rows.push_back({d, 0.0});
    for (const auto& b : draws) {
        SemigroupSpectrum spectrum(discretize_generator(b, grid));
        auto pf = spectrum.apply(delta_t, fg);
        std::vector<double> row;
        for (std::size_t r = 0; r < deltas.size(); ++r) {
            double w = modulus_of_continuity(grid, pf, compact, deltas[r]);
            row.push_back(w);
            t.rows[r].modulus = std::max(t.rows[r].modulus, w);
        }
        t.per_draw.push_back(std::move(row));
    }
    return t;
}

EquicontinuityTable equicontinuity_probe(const PriorSampler& prior, int n_draws,
                                         const std::function<double(double)>& f, double delta_t,
                                         Interval compact, std::vector<double> deltas,
                                         const SpatialGrid& grid, Rng& rng) {
    if (n_draws < 1) throw ValidationError("equicontinuity probe needs n_draws >= 1");
    std::vector<Drift> draws;
    for (int i = 0; i < n_draws; ++i) draws.push_back(prior(rng));
    return equicontinuity_probe(draws, f, delta_t, compact, std::move(deltas), grid);
}

void write_equicontinuity_csv(const EquicontinuityTable& t, const std::string& path) {
    auto out = open_csv(path, "delta,modulus,ratio");
    for (const auto& r : t.rows) {
        out << format_real(r.delta) << ',' << format_real(r.modulus) << ','
            << format_real(r.modulus / r.delta) << '\n';
    }
}

// ---------------------------------------------------------------- martingale

MartingaleTrace martingale_trace(const LikelihoodContext& ctx, const std::vector<Drift>& prior_sample,
                                 const Drift& b0, Interval region, double epsilon,
                                 const std::function<double(double)>& f, const FiniteMeasure& nu,
                                 Interval compact) {
    if (prior_sample.empty()) throw ValidationError("martingale trace needs a prior sample");
    if (!(nu.grid() == ctx.grid())) throw ValidationError("measure and likelihood grids differ");
    const auto& grid = ctx.grid();
    const auto& obs = ctx.observations().observations;
    double lo = *std::min_element(obs.begin(), obs.end());
    double hi = *std::max_element(obs.begin(), obs.end());
    if (region.hi < lo || region.lo > hi) throw ValidationError("region does not meet the data range");
    double nu_k = nu.mass_of(compact.lo, compact.hi);
    if (!(nu_k > 0.0)) throw ValidationError("compact set has zero nu mass");

    MartingaleTrace t;
    t.prior_sample_size = static_cast<int>(prior_sample.size());
    t.contraction_k = 1.0 / (128.0 * nu_k * nu_k);
    t.threshold = epsilon / (4.0 * nu_k);
    t.predicate = "P^b f - P^b0 f > " + format_real(t.threshold) + " on [" + format_real(region.lo) +
                  ", " + format_real(region.hi) + "]";

    auto fg = sample_on(grid, f);
    require_test_function_bound(fg);
    auto m0 = ctx.model(b0);
    auto p0f = apply_operator(m0->kernel, fg);
    auto base = ctx.log_terms(b0);
    int N = ctx.observations().transitions();

    // Cumulative log L_n(b) for members of B+.
    std::vector<std::vector<double>> cum;
    for (const auto& b : prior_sample) {
        auto pf = apply_operator(ctx.model(b)->kernel, fg);
        bool inside = true;
        bool any = false;
        for (int i = 0; i < grid.size() && inside; ++i) {
            if (!region.contains(grid.node(i))) continue;
            any = true;
            inside = pf[i] - p0f[i] > t.threshold;
        }
        if (!any || !inside) continue;
        auto terms = ctx.log_terms(b);
        std::vector<double> c(N + 1);
        double s = 0.0;
        for (int n = 0; n <= N; ++n) {
            s += terms[n] - base[n];
            c[n] = s;
        }
        cum.push_back(std::move(c));
    }
    t.members_in_set = static_cast<int>(cum.size());
    t.empty_set = cum.empty();

    t.occupancy.assign(N + 1, 0);
    for (int n = 2; n <= N; ++n) t.occupancy[n] = t.occupancy[n - 1] + (region.contains(obs[n - 1]) ? 1 : 0);

    double log_size = std::log(static_cast<double>(prior_sample.size()));
    double log_q = std::log1p(-t.contraction_k * epsilon * epsilon);
    t.d.resize(N + 1);
    t.m.resize(N + 1);
    t.log_d.resize(N + 1);
    for (int n = 0; n <= N; ++n) {
        double ld = -kInf;
        if (!cum.empty()) {
            double top = -kInf;
            for (const auto& c : cum) top = std::max(top, c[n]);
            if (std::isfinite(top)) {
                double s = 0.0;
                for (const auto& c : cum) s += std::exp(c[n] - top);
                ld = 0.5 * (top + std::log(s) - log_size);
            }
        }
        t.log_d[n] = ld;
        t.d[n] = std::exp(ld);
        t.m[n] = std::exp(ld - t.occupancy[n] * log_q);
    }
    return t;
}

bool SupermartingaleAudit::occupancy_pass(double tol) const noexcept {
    return std::abs(occupancy_mean - invariant_mass) <= tol;
}

SupermartingaleAudit supermartingale_audit(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto& ms = cfg.martingale;
    auto cache = std::make_shared<ModelCache>(cfg.grid, cfg.delta_t);
    auto nu = cfg.nu();
    const auto& f = test_function(ms.test_function).f;
    Rng root(seed);
    Rng prior_rng = root.split(0xB0B0);
    std::vector<Drift> sample;
    for (int i = 0; i < ms.prior_sample_size; ++i) sample.push_back(cfg.prior.sampler(prior_rng));
    auto pi0 = invariant_density(cfg.true_drift, cfg.grid);

    SupermartingaleAudit audit;
    audit.invariant_mass = pi0.probability(ms.region.lo, ms.region.hi);
    audit.traces.resize(ms.replications);
    parallel_for(ms.replications, cfg.workers, [&](int r) {
        Rng data_rng = root.split(static_cast<std::uint64_t>(r));
        auto record = generate_record(cfg, *cache, ms.n, data_rng);
        LikelihoodContext ctx(record, cache, cfg.true_drift);
        audit.traces[r] = martingale_trace(ctx, sample, cfg.true_drift, ms.region, ms.epsilon, f, nu,
                                           ms.compact);
    });
    double sum = 0.0, occ = 0.0;
    for (const auto& t : audit.traces) {
        int N = static_cast<int>(t.m.size()) - 1;
        double inc = (t.m.back() - t.m.front()) / N;
        audit.mean_increment_per_replication.push_back(inc);
        sum += inc;
        double frac = static_cast<double>(t.occupancy.back()) / (N - 1);
        audit.occupancy_fraction.push_back(frac);
        occ += frac;
    }
    double k = static_cast<double>(audit.traces.size());
    audit.mean_increment = sum / k;
    audit.occupancy_mean = occ / k;
    double ss = 0.0;
    for (double v : audit.mean_increment_per_replication) {
        ss += (v - audit.mean_increment) * (v - audit.mean_increment);
    }
    audit.standard_error = std::sqrt(ss / (k - 1.0) / k);
    return audit;
}

void write_martingale_csv(const SupermartingaleAudit& audit, const std::string& path) {
    auto out = open_csv(path, "replication,n,d,log_d,m,occupancy");
    for (std::size_t r = 0; r < audit.traces.size(); ++r) {
        const auto& t = audit.traces[r];
        for (std::size_t n = 0; n < t.d.size(); ++n) {
            out << r << ',' << n << ',' << format_real(t.d[n]) << ',' << format_real(t.log_d[n]) << ','
                << format_real(t.m[n]) << ',' << t.occupancy[n] << '\n';
        }
    }
}

void write_martingale_summary_csv(const SupermartingaleAudit& audit, const std::string& path) {
    auto out = open_csv(path,
                        "replication,mean_increment,occupancy_fraction,invariant_mass,members_in_set,"
                        "prior_sample_size,empty_set");
    for (std::size_t r = 0; r < audit.traces.size(); ++r) {
        const auto& t = audit.traces[r];
        out << r << ',' << format_real(audit.mean_increment_per_replication[r]) << ','
            << format_real(audit.occupancy_fraction[r]) << ',' << format_real(audit.invariant_mass) << ','
            << t.members_in_set << ',' << t.prior_sample_size << ',' << (t.empty_set ? 1 : 0) << '\n';
    }
}

// ------------------------------------------------------------------- KL audit

double KlAudit::pass_rate() const {
    if (rows.empty()) return 0.0;
    double pass = 0.0;
    for (const auto& r : rows) pass += r.report.within_bound ? 1.0 : 0.0;
    return pass / static_cast<double>(rows.size());
}

KlAudit kl_audit(const PriorSampler& prior, const Drift& b0, double delta_t, int n_pairs,
                 const SpatialGrid& grid, Rng& rng, int workers) {
    if (n_pairs < 1) throw ValidationError("kl_audit needs n_pairs >= 1");
    std::vector<Drift> draws{b0};
    for (int i = 0; i < n_pairs; ++i) draws.push_back(prior(rng));
    ModelCache cache(grid, delta_t);
    auto m0 = cache.get(b0);
    KlAudit audit;
    audit.rows.resize(draws.size());
    parallel_for(static_cast<int>(draws.size()), workers, [&](int i) {
        auto m = cache.get(draws[i]);
        audit.rows[i] = {i, kl_divergence(*m0, b0, *m, draws[i])};
    });
    return audit;
}

void write_kl_audit_csv(const KlAudit& audit, const std::string& path) {
    auto out = open_csv(path, "pair,kl,upper_bound,l2_mu0,hellinger_sq_avg,within_bound");
    for (const auto& r : audit.rows) {
        out << r.pair << ',' << format_real(r.report.kl_value) << ',' << format_real(r.report.upper_bound)
            << ',' << format_real(r.report.l2_mu0) << ',' << format_real(r.report.hellinger_sq_avg) << ','
            << (r.report.within_bound ? 1 : 0) << '\n';
    }
}

// ----------------------------------------------------------------- prior mass

std::vector<PriorMassRow> prior_mass_probe(const PriorSampler& prior, const Drift& b0,
                                           const std::vector<double>& epsilons, int n_draws,
                                           const InvariantDensity& pi0, Rng& rng) {
    if (n_draws < 1) throw ValidationError("prior_mass_probe needs n_draws >= 1");
    std::vector<double> dist;
    dist.reserve(n_draws);
    for (int i = 0; i < n_draws; ++i) dist.push_back(l2_mu0_distance(prior(rng), b0, pi0));
    std::vector<PriorMassRow> rows;
    const double z = 1.959963984540054;
    for (double eps : epsilons) {
        PriorMassRow r;
        r.epsilon = eps;
        r.draws = n_draws;
        r.hits = static_cast<int>(std::count_if(dist.begin(), dist.end(), [eps](double d) { return d < eps; }));
        double n = n_draws, p = r.hits / n;
        r.fraction = p;
        double denom = 1.0 + z * z / n;
        double centre = (p + z * z / (2.0 * n)) / denom;
        double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
        r.ci_lo = r.hits == 0 ? 0.0 : std::max(0.0, centre - half);
        r.ci_hi = r.hits == n_draws ? 1.0 : std::min(1.0, centre + half);
        rows.push_back(r);
    }
    return rows;
}

void write_prior_mass_csv(const std::vector<PriorMassRow>& rows, const std::string& path) {
    auto out = open_csv(path, "epsilon,hits,draws,fraction,ci_lo,ci_hi");
    for (const auto& r : rows) {
        out << format_real(r.epsilon) << ',' << r.hits << ',' << r.draws << ',' << format_real(r.fraction)
            << ',' << format_real(r.ci_lo) << ',' << format_real(r.ci_hi) << '\n';
    }
}

}  // namespace ergodrift
