#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ergodrift {

enum class WaveletFamily {
    haar,         ///< closed form; psi is discontinuous
    daubechies3,  ///< six-tap Daubechies, C^1, tabulated by the cascade algorithm
};

const char* to_string(WaveletFamily f);
WaveletFamily wavelet_family_from_string(const std::string& s);

/// Father and mother wavelets with compact support [0, support_length()].
class WaveletSystem {
public:
    static std::shared_ptr<const WaveletSystem> haar();
    /// Cascade tabulation at dyadic resolution 2^-depth (shared instance for depth 12).
    static std::shared_ptr<const WaveletSystem> daubechies3(int cascade_depth = 12);
    static std::shared_ptr<const WaveletSystem> make(WaveletFamily family);

    WaveletFamily family() const noexcept { return family_; }
    int cascade_depth() const noexcept { return depth_; }
    double support_length() const noexcept { return support_; }

    double phi(double x) const;
    double psi(double x) const;
    /// \int_0^x phi and \int_0^x psi, exact for the tabulated interpolant.
    double phi_integral(double x) const;
    double psi_integral(double x) const;

    /// sup_x sum_k |phi(x - k)| over one period (condition theta).
    double theta_phi() const noexcept { return theta_phi_; }
    /// sup_x sum_k |psi(x - k)|; bounds the detail part through the w-norm.
    double theta_psi() const noexcept { return theta_psi_; }

    /// phi is continuously differentiable and psi too (false for Haar).
    bool meets_smoothness_hypothesis() const noexcept { return family_ != WaveletFamily::haar; }

    const std::vector<double>& filter() const noexcept { return filter_; }

private:
    WaveletSystem() = default;
    double table_lookup(const std::vector<double>& table, double x) const;
    double cumulative_lookup(const std::vector<double>& table, const std::vector<double>& cumulative,
                             double x) const;
    void build_cumulative();
    void compute_theta();

    WaveletFamily family_ = WaveletFamily::haar;
    int depth_ = 0;
    double support_ = 1.0;
    std::vector<double> filter_;
    std::vector<double> phi_table_;
    std::vector<double> psi_table_;
    std::vector<double> phi_cumulative_;
    std::vector<double> psi_cumulative_;
    double theta_phi_ = 1.0;
    double theta_psi_ = 1.0;
};

/// Contiguous run of coefficients at one level; level -1 holds father
/// coefficients a_k, level j >= 0 detail coefficients b_{j,k}.
struct CoefficientBlock {
    int level = -1;
    int k_min = 0;
    std::vector<double> values;

    int k_max() const noexcept { return k_min + static_cast<int>(values.size()) - 1; }
};

/// Finitely supported expansion sum_k a_k phi_k + sum_{j<=J} sum_k b_{j,k} psi_{j,k}
/// with psi_{j,k}(x) = 2^{j/2} psi(2^j x - k).
struct WaveletCoefficients {
    CoefficientBlock father;
    std::vector<CoefficientBlock> details;  ///< details[j].level == j
    int max_level = 0;                      ///< J
    double s = 0.5;                         ///< Hoelder index in (0, 1)
    double L = 1.0;                         ///< coefficient bound

    double a(int k) const;
    double b(int j, int k) const;
    std::size_t count() const;
    std::uint64_t fingerprint() const;
};

/// eta_j = 2^{-j (s + 1/2)}.
double eta(int j, double s);

/// Expansion value, summing only basis functions whose support contains x.
double evaluate_expansion(const WaveletSystem& sys, const WaveletCoefficients& c, double x);

/// \int_a^b of the expansion, exact for the tabulated basis.
double integrate_expansion(const WaveletSystem& sys, const WaveletCoefficients& c, double a,
                           double b);

struct HolderCertificate {
    double father_sup = 0.0;  ///< sup_k |a_k|
    double detail_sup = 0.0;  ///< sup_j sup_k 2^{j(s+1/2)} |b_{j,k}|
    double w_norm = 0.0;      ///< sum_j 2^{j/2} sup_k |b_{j,k}|

    /// max(father_sup, detail_sup); <= L certifies membership in the coefficient
    /// class charged by the wavelet prior.
    double value() const noexcept { return father_sup > detail_sup ? father_sup : detail_sup; }
    /// father_sup + detail_sup, the combined membership functional.
    double combined() const noexcept { return father_sup + detail_sup; }
};

HolderCertificate holder_certificate(const WaveletCoefficients& c);

/// theta_phi * sup|a| + theta_psi * ||b||_w: a certified bound on sup |f|.
double expansion_sup_bound(const WaveletSystem& sys, const WaveletCoefficients& c);

/// CSV `level,shift,value` with level -1 for father coefficients.
void write_coefficients_csv(const WaveletCoefficients& c, const std::string& path);
/// Reads coefficients; s and L must be supplied because the CSV does not carry them.
WaveletCoefficients read_coefficients_csv(const std::string& path, double s, double L);

}  // namespace ergodrift
