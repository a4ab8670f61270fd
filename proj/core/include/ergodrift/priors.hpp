#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergodrift/drift.hpp"
#include "ergodrift/rng.hpp"
#include "ergodrift/wavelet.hpp"

namespace ergodrift {

/// Equal to f on [-m, m], +1 on (-inf, -m-1], -1 on [m+1, inf), linear in between.
/// The result keeps f's representation and records m as its support radius.
Drift tail_extend(const Drift& f, double m);
/// As above for a bare function; sup |f| on [-m, m] is probed on 4001 points.
Drift tail_extend(const std::function<double(double)>& f, double m, std::string label = {});

/// Number of equispaced points of the sup-norm probe grid on an interval.
inline constexpr int kProbePoints = 4001;

enum class CoefficientDensity { uniform, truncated_gaussian };

const char* to_string(CoefficientDensity d);

/// Truncated geometric probabilities on {first, ..., first + count - 1}.
std::vector<double> truncated_geometric(int count, double ratio);

struct WaveletPriorSpec {
    std::shared_ptr<const WaveletSystem> system;
    double s = 0.5;
    double L = 1.0;
    std::vector<double> j_distribution;  ///< P(J = j), j = 0..J_max
    std::vector<double> m_distribution;  ///< p_m, m = 1..m_max
    CoefficientDensity coefficient_density = CoefficientDensity::uniform;
    double gaussian_sd_fraction = 0.5;   ///< sd = fraction * L for the truncated Gaussian

    /// Daubechies system, s = 0.5, L = 1, geometric J up to 6, geometric m up to 8.
    static WaveletPriorSpec defaults();

    int j_max() const noexcept { return static_cast<int>(j_distribution.size()) - 1; }
    int m_max() const noexcept { return static_cast<int>(m_distribution.size()); }
    /// theta_phi + theta_psi / (1 - 2^{-s}): sup |b| <= max(1, C_norm L) for every draw.
    double norm_constant() const;
    /// True when the family is Haar (psi not continuously differentiable).
    bool haar_warning() const noexcept;
    void validate() const;
};

/// Index ranges of coefficients whose basis supports meet [-radius, radius].
struct CoefficientLayout {
    struct Range {
        int level;
        int k_min;
        int k_max;
    };
    std::vector<Range> ranges;  ///< father first, then levels 0..J
    std::size_t dimension() const;
};

CoefficientLayout coefficient_layout(const WaveletSystem& sys, int J, double radius);

/// Coefficients with father values taken from `theta` in layout order and
/// detail values eta_j * theta (theta entries are the raw V_k, U_{j,k}).
WaveletCoefficients assemble_coefficients(const CoefficientLayout& layout,
                                          const std::vector<double>& theta, double s, double L);

/// The bare expansion (no tail extension), with certified sup bound.
Drift wavelet_expansion(std::shared_ptr<const WaveletSystem> sys, WaveletCoefficients coefficients);
/// Wavelet expansion tail-extended at radius m, with certified sup bound.
Drift wavelet_drift(std::shared_ptr<const WaveletSystem> sys, WaveletCoefficients coefficients,
                    double m);

/// Draw from the auxiliary prior on the whole coefficient class (no tail
/// extension); coefficients cover basis functions meeting [-(m+1), m+1].
WaveletCoefficients draw_wavelet_coefficients(const WaveletPriorSpec& spec, int J, int m, Rng& rng);

double draw_coefficient(const WaveletPriorSpec& spec, Rng& rng);
/// Log prior density of one raw coefficient on [-L, L] (up to a constant).
double coefficient_log_density(const WaveletPriorSpec& spec, double v);

struct WaveletDraw {
    int J = 0;
    int m = 1;
    Drift drift;
};

WaveletDraw draw_wavelet_prior_detailed(const WaveletPriorSpec& spec, Rng& rng);
Drift draw_wavelet_prior(const WaveletPriorSpec& spec, Rng& rng);

struct NetAtom {
    Drift drift;
    double probability;
    int m;
    int n;
};

struct NetPriorSpec {
    std::vector<NetAtom> atoms;
    std::vector<double> p_m;       ///< index distribution over m = 1..
    std::vector<double> q_n;       ///< index distribution over n = 1..
    std::vector<double> epsilons;  ///< eps_n, decreasing

    /// Prior with the given atoms and probabilities (renormalized).
    static NetPriorSpec from_atoms(const std::vector<Drift>& drifts,
                                   const std::vector<double>& probabilities);
    void validate() const;
};

/// Returns a candidate from the generating family, meant to be restricted to [-m, m].
using FamilySampler = std::function<Drift(int m, Rng& rng)>;

struct NetBuildParams {
    std::vector<double> p_m;
    std::vector<double> q_n;
    std::vector<double> epsilons;
    int candidates_per_net = 200;
    int atom_budget = 2000;
};

/// Greedy covering: a candidate becomes an atom iff its probe-grid sup distance
/// on [-m, m] to every current atom exceeds eps_n. Throws BudgetExceeded when the
/// total number of atoms would exceed the budget.
NetPriorSpec build_net_prior(const FamilySampler& family, const NetBuildParams& params, Rng& rng);

/// Fraction of `samples` fresh family members within eps of some atom of net (m, n).
double audit_net(const NetPriorSpec& spec, const FamilySampler& family, int m, int n, int samples,
                 Rng& rng);

Drift draw_net_prior(const NetPriorSpec& spec, Rng& rng);

/// Family sampler drawing wavelet expansions from the auxiliary prior (J from the spec).
FamilySampler wavelet_family(const WaveletPriorSpec& spec);

nlohmann::json to_json(const WaveletPriorSpec& spec);
WaveletPriorSpec wavelet_prior_from_json(const nlohmann::json& j);

}  // namespace ergodrift
