#include "ergodrift/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ergodrift/errors.hpp"

namespace ergodrift {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// f_left = f(-m), f_right = f(m).
double extend(const std::function<double(double)>& f, double m, double f_left, double f_right,
              double x) {
    if (x >= m + 1.0) return -1.0;
    if (x <= -m - 1.0) return 1.0;
    if (x > m) return f_right + (x - m) * (-1.0 - f_right);
    if (x < -m) return f_left + (-m - x) * (1.0 - f_left);
    return f(x);
}

// \int_a^b of the extension; `inner(p, q)` integrates f over pieces inside [-m, m].
double extend_integral(const std::function<double(double, double)>& inner, double m, double f_left,
                       double f_right, double a, double b) {
    if (a == b) return 0.0;
    if (a > b) return -extend_integral(inner, m, f_left, f_right, b, a);
    const double cuts[5] = {-kInf, -m - 1.0, -m, m, m + 1.0};
    double total = 0.0;
    for (int piece = 0; piece < 5; ++piece) {
        double p = std::max(a, cuts[piece]);
        double q = std::min(b, piece + 1 < 5 ? cuts[piece + 1] : kInf);
        if (!(q > p)) continue;
        switch (piece) {
            case 0: total += q - p; break;
            case 4: total -= q - p; break;
            case 2: total += inner(p, q); break;
            case 1: {
                auto g = [&](double x) { return f_left + (-m - x) * (1.0 - f_left); };
                total += 0.5 * (q - p) * (g(p) + g(q));
                break;
            }
            case 3: {
                auto g = [&](double x) { return f_right + (x - m) * (-1.0 - f_right); };
                total += 0.5 * (q - p) * (g(p) + g(q));
                break;
            }
        }
    }
    return total;
}

std::vector<double> probe(const std::function<double(double)>& f, double m) {
    std::vector<double> v(kProbePoints);
    for (int i = 0; i < kProbePoints; ++i) v[i] = f(-m + 2.0 * m * i / (kProbePoints - 1));
    return v;
}

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

std::vector<double> cumulative(const std::vector<double>& p) {
    std::vector<double> c(p.size());
    std::partial_sum(p.begin(), p.end(), c.begin());
    return c;
}

void require_distribution(const std::vector<double>& p, const char* what, bool strictly_positive) {
    if (p.empty()) throw ValidationError(std::string(what) + " is empty");
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || (strictly_positive && !(v > 0.0))) {
            throw ValidationError(std::string(what) + " has an invalid entry");
        }
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError(std::string(what) + " must sum to 1");
}

std::vector<double> normalized(std::vector<double> p) {
    double s = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(s > 0.0)) throw ValidationError("probability vector has zero mass");
    for (double& v : p) v /= s;
    return p;
}

}  // namespace

Drift tail_extend(const Drift& f, double m) {
    if (!(m > 0.0)) throw ValidationError("tail_extend radius must be positive");
    double bound = f.sup_bound();
    if (!std::isfinite(bound)) bound = sup_abs(probe([&f](double x) { return f(x); }, m));
    std::function<double(double)> inner = [f](double y) { return f(y); };
    double fl = f(-m), fr = f(m);
    auto eval = [inner, m, fl, fr](double x) { return extend(inner, m, fl, fr, x); };
    std::string label = f.label().empty() ? "tail" : f.label() + "|tail";
    auto integral = [f, m, fl, fr](double a, double b) {
        return extend_integral([&f](double p, double q) { return f.integral(p, q); }, m, fl, fr, a,
                               b);
    };
    return Drift(eval, std::max(1.0, bound), f.representation(), m, label).with_integral(integral);
}

Drift tail_extend(const std::function<double(double)>& f, double m, std::string label) {
    if (!(m > 0.0)) throw ValidationError("tail_extend radius must be positive");
    auto values = probe(f, m);
    std::uint64_t h = fnv1a(values.data(), values.size() * sizeof(double));
    double fl = f(-m), fr = f(m);
    auto eval = [f, m, fl, fr](double x) { return extend(f, m, fl, fr, x); };
    ClosedFormRepr repr{"tail_extended:" + label, {m, static_cast<double>(h >> 11)}};
    auto integral = [f, m, fl, fr](double a, double b) {
        return extend_integral([&f](double p, double q) { return integrate(f, p, q); }, m, fl, fr,
                               a, b);
    };
    return Drift(eval, std::max(1.0, sup_abs(values)), repr, m, label.empty() ? "tail" : label)
        .with_integral(integral);
}

const char* to_string(CoefficientDensity d) {
    return d == CoefficientDensity::uniform ? "uniform" : "truncated_gaussian";
}

std::vector<double> truncated_geometric(int count, double ratio) {
    if (count < 1 || !(ratio > 0.0)) throw ValidationError("truncated_geometric: bad parameters");
    std::vector<double> p(count);
    for (int i = 0; i < count; ++i) p[i] = std::pow(ratio, i);
    return normalized(p);
}

WaveletPriorSpec WaveletPriorSpec::defaults() {
    WaveletPriorSpec s;
    s.system = WaveletSystem::daubechies3();
    s.j_distribution = truncated_geometric(7, 0.5);
    s.m_distribution = truncated_geometric(8, 0.5);
    return s;
}

double WaveletPriorSpec::norm_constant() const {
    return system->theta_phi() + system->theta_psi() / (1.0 - std::exp2(-s));
}

bool WaveletPriorSpec::haar_warning() const noexcept {
    return system && !system->meets_smoothness_hypothesis();
}

void WaveletPriorSpec::validate() const {
    if (!system) throw ValidationError("wavelet prior needs a wavelet system");
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("wavelet prior needs s in (0, 1)");
    if (!(L > 0.0)) throw ValidationError("wavelet prior needs L > 0");
    require_distribution(j_distribution, "J distribution", false);
    require_distribution(m_distribution, "m distribution", true);
    if (!(gaussian_sd_fraction > 0.0)) throw ValidationError("gaussian_sd_fraction must be > 0");
}

std::size_t CoefficientLayout::dimension() const {
    std::size_t n = 0;
    for (const auto& r : ranges) n += static_cast<std::size_t>(r.k_max - r.k_min + 1);
    return n;
}

CoefficientLayout coefficient_layout(const WaveletSystem& sys, int J, double radius) {
    if (J < 0) throw ValidationError("J must be >= 0");
    if (!(radius > 0.0)) throw ValidationError("layout radius must be > 0");
    double supp = sys.support_length();
    CoefficientLayout layout;
    for (int level = -1; level <= J; ++level) {
        double scale = level < 0 ? 1.0 : std::ldexp(1.0, level);
        int lo = static_cast<int>(std::ceil(-radius * scale - supp));
        int hi = static_cast<int>(std::floor(radius * scale));
        layout.ranges.push_back({level, lo, hi});
    }
    return layout;
}

WaveletCoefficients assemble_coefficients(const CoefficientLayout& layout,
                                          const std::vector<double>& theta, double s, double L) {
    if (theta.size() != layout.dimension()) throw ValidationError("coefficient vector has wrong size");
    WaveletCoefficients c;
    c.s = s;
    c.L = L;
    std::size_t pos = 0;
    for (const auto& r : layout.ranges) {
        CoefficientBlock blk;
        blk.level = r.level;
        blk.k_min = r.k_min;
        double w = r.level < 0 ? 1.0 : eta(r.level, s);
        for (int k = r.k_min; k <= r.k_max; ++k) blk.values.push_back(w * theta[pos++]);
        if (r.level < 0) {
            c.father = std::move(blk);
        } else {
            c.details.push_back(std::move(blk));
        }
    }
    c.max_level = static_cast<int>(layout.ranges.size()) - 2;
    return c;
}

Drift wavelet_expansion(std::shared_ptr<const WaveletSystem> sys, WaveletCoefficients coefficients) {
    auto coeffs = std::make_shared<const WaveletCoefficients>(std::move(coefficients));
    double bound = expansion_sup_bound(*sys, *coeffs);
    auto eval = [sys, coeffs](double x) { return evaluate_expansion(*sys, *coeffs, x); };
    return Drift(eval, bound, WaveletRepr{sys, coeffs}, kInf, "wavelet")
        .with_integral([sys, coeffs](double a, double b) {
            return integrate_expansion(*sys, *coeffs, a, b);
        });
}

Drift wavelet_drift(std::shared_ptr<const WaveletSystem> sys, WaveletCoefficients coefficients,
                    double m) {
    return tail_extend(wavelet_expansion(std::move(sys), std::move(coefficients)), m);
}

double draw_coefficient(const WaveletPriorSpec& spec, Rng& rng) {
    if (spec.coefficient_density == CoefficientDensity::uniform) return rng.uniform(-spec.L, spec.L);
    double sd = spec.gaussian_sd_fraction * spec.L;
    for (;;) {
        double v = sd * rng.normal();
        if (std::abs(v) <= spec.L) return v;
    }
}

double coefficient_log_density(const WaveletPriorSpec& spec, double v) {
    if (!(std::abs(v) <= spec.L)) return -kInf;
    if (spec.coefficient_density == CoefficientDensity::uniform) return -std::log(2.0 * spec.L);
    double sd = spec.gaussian_sd_fraction * spec.L;
    return -0.5 * v * v / (sd * sd);
}

WaveletCoefficients draw_wavelet_coefficients(const WaveletPriorSpec& spec, int J, int m, Rng& rng) {
    auto layout = coefficient_layout(*spec.system, J, m + 1.0);
    std::vector<double> theta(layout.dimension());
    for (double& v : theta) v = draw_coefficient(spec, rng);
    return assemble_coefficients(layout, theta, spec.s, spec.L);
}

WaveletDraw draw_wavelet_prior_detailed(const WaveletPriorSpec& spec, Rng& rng) {
    auto jc = cumulative(spec.j_distribution);
    auto mc = cumulative(spec.m_distribution);
    int J = static_cast<int>(rng.categorical(jc.data(), jc.size()));
    int m = static_cast<int>(rng.categorical(mc.data(), mc.size())) + 1;
    auto coeffs = draw_wavelet_coefficients(spec, J, m, rng);
    return {J, m, wavelet_drift(spec.system, std::move(coeffs), m)};
}

Drift draw_wavelet_prior(const WaveletPriorSpec& spec, Rng& rng) {
    return draw_wavelet_prior_detailed(spec, rng).drift;
}

NetPriorSpec NetPriorSpec::from_atoms(const std::vector<Drift>& drifts,
                                      const std::vector<double>& probabilities) {
    if (drifts.empty() || drifts.size() != probabilities.size()) {
        throw ValidationError("net prior needs one probability per atom");
    }
    auto p = normalized(probabilities);
    NetPriorSpec spec;
    for (std::size_t i = 0; i < drifts.size(); ++i) {
        double r = drifts[i].support_radius();
        spec.atoms.push_back({drifts[i], p[i], std::isfinite(r) ? static_cast<int>(r) : 0, 1});
    }
    return spec;
}

void NetPriorSpec::validate() const {
    if (atoms.empty()) throw ValidationError("net prior has no atoms");
    double s = 0.0;
    for (const auto& a : atoms) {
        if (!(a.probability >= 0.0)) throw ValidationError("net prior atom probability must be >= 0");
        s += a.probability;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError("net prior probabilities must sum to 1");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0) || (i > 0 && !(epsilons[i] < epsilons[i - 1]))) {
            throw ValidationError("net prior epsilons must be positive and decreasing");
        }
    }
}

NetPriorSpec build_net_prior(const FamilySampler& family, const NetBuildParams& params, Rng& rng) {
    if (params.q_n.size() != params.epsilons.size()) {
        throw ValidationError("net build: q_n and epsilons must have equal length");
    }
    if (params.candidates_per_net < 1) throw ValidationError("net build: candidates_per_net must be >= 1");
    NetPriorSpec spec;
    spec.p_m = normalized(params.p_m);
    spec.q_n = normalized(params.q_n);
    spec.epsilons = params.epsilons;
    int total = 0;
    for (std::size_t mi = 0; mi < spec.p_m.size(); ++mi) {
        int m = static_cast<int>(mi) + 1;
        for (std::size_t ni = 0; ni < spec.q_n.size(); ++ni) {
            double eps = spec.epsilons[ni];
            std::vector<std::vector<double>> probes;
            std::vector<Drift> members;
            for (int c = 0; c < params.candidates_per_net; ++c) {
                Drift f = family(m, rng);
                auto v = probe([&f](double x) { return f(x); }, m);
                bool covered = false;
                for (const auto& p : probes) {
                    if (sup_distance(p, v) <= eps) {
                        covered = true;
                        break;
                    }
                }
                if (covered) continue;
                if (++total > params.atom_budget) {
                    throw BudgetExceeded("net prior needs more than " +
                                         std::to_string(params.atom_budget) + " atoms");
                }
                probes.push_back(std::move(v));
                members.push_back(std::move(f));
            }
            double p = spec.p_m[mi] * spec.q_n[ni] / static_cast<double>(members.size());
            for (const auto& f : members) {
                spec.atoms.push_back({tail_extend(f, m), p, m, static_cast<int>(ni) + 1});
            }
        }
    }
    spec.validate();
    return spec;
}

double audit_net(const NetPriorSpec& spec, const FamilySampler& family, int m, int n, int samples,
                 Rng& rng) {
    if (n < 1 || n > static_cast<int>(spec.epsilons.size())) throw ValidationError("audit_net: bad n");
    if (samples < 1) throw ValidationError("audit_net: samples must be >= 1");
    double eps = spec.epsilons[n - 1];
    std::vector<std::vector<double>> probes;
    for (const auto& a : spec.atoms) {
        if (a.m == m && a.n == n) probes.push_back(probe([&a](double x) { return a.drift(x); }, m));
    }
    if (probes.empty()) throw ValidationError("audit_net: no atoms for the requested (m, n)");
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
        Drift f = family(m, rng);
        auto v = probe([&f](double x) { return f(x); }, m);
        for (const auto& p : probes) {
            if (sup_distance(p, v) <= eps) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / samples;
}

Drift draw_net_prior(const NetPriorSpec& spec, Rng& rng) {
    std::vector<double> c(spec.atoms.size());
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (s += spec.atoms[i].probability);
    return spec.atoms[rng.categorical(c.data(), c.size())].drift;
}

FamilySampler wavelet_family(const WaveletPriorSpec& spec) {
    spec.validate();
    return [spec](int m, Rng& rng) {
        auto jc = cumulative(spec.j_distribution);
        int J = static_cast<int>(rng.categorical(jc.data(), jc.size()));
        return wavelet_expansion(spec.system, draw_wavelet_coefficients(spec, J, m, rng));
    };
}

nlohmann::json to_json(const WaveletPriorSpec& spec) {
    nlohmann::ordered_json j;
    j["family"] = to_string(spec.system->family());
    j["s"] = spec.s;
    j["L"] = spec.L;
    j["J_max"] = spec.j_max();
    j["m_max"] = spec.m_max();
    j["j_distribution"] = spec.j_distribution;
    j["m_distribution"] = spec.m_distribution;
    j["coefficient_density"] = to_string(spec.coefficient_density);
    j["gaussian_sd_fraction"] = spec.gaussian_sd_fraction;
    return j;
}

WaveletPriorSpec wavelet_prior_from_json(const nlohmann::json& j) {
    try {
        auto spec = WaveletPriorSpec::defaults();
        if (j.contains("family")) {
            spec.system = WaveletSystem::make(wavelet_family_from_string(j.at("family").get<std::string>()));
        }
        spec.s = j.value("s", spec.s);
        spec.L = j.value("L", spec.L);
        if (j.contains("j_distribution")) {
            spec.j_distribution = j.at("j_distribution").get<std::vector<double>>();
        } else if (j.contains("J_max")) {
            spec.j_distribution = truncated_geometric(j.at("J_max").get<int>() + 1, j.value("j_ratio", 0.5));
        }
        if (j.contains("m_distribution")) {
            spec.m_distribution = j.at("m_distribution").get<std::vector<double>>();
        } else if (j.contains("m_max")) {
            spec.m_distribution = truncated_geometric(j.at("m_max").get<int>(), j.value("m_ratio", 0.5));
        }
        if (j.contains("coefficient_density")) {
            auto d = j.at("coefficient_density").get<std::string>();
            if (d == "uniform") {
                spec.coefficient_density = CoefficientDensity::uniform;
            } else if (d == "truncated_gaussian") {
                spec.coefficient_density = CoefficientDensity::truncated_gaussian;
            } else {
                throw ValidationError("unknown coefficient_density '" + d + "'");
            }
        }
        spec.gaussian_sd_fraction = j.value("gaussian_sd_fraction", spec.gaussian_sd_fraction);
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("wavelet prior spec: ") + e.what());
    }
}

}  // namespace ergodrift
