#include "ergodrift/wavelet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "ergodrift/drift.hpp"
#include "ergodrift/errors.hpp"
#include "ergodrift/simulate.hpp"

namespace ergodrift {

const char* to_string(WaveletFamily f) {
    return f == WaveletFamily::haar ? "haar" : "daubechies3";
}

WaveletFamily wavelet_family_from_string(const std::string& s) {
    if (s == "haar") return WaveletFamily::haar;
    if (s == "daubechies3" || s == "db3") return WaveletFamily::daubechies3;
    throw ValidationError("unknown wavelet family '" + s + "'");
}

std::shared_ptr<const WaveletSystem> WaveletSystem::haar() {
    static const std::shared_ptr<const WaveletSystem> sys = [] {
        std::shared_ptr<WaveletSystem> w(new WaveletSystem());
        w->family_ = WaveletFamily::haar;
        w->support_ = 1.0;
        w->filter_ = {M_SQRT1_2, M_SQRT1_2};
        return w;
    }();
    return sys;
}

namespace {

// Values of phi at the integers 0..len: the fixed point of the refinement
// equation, normalized to sum one.
std::vector<double> integer_values(const std::vector<double>& h) {
    int len = static_cast<int>(h.size()) - 1;
    int n = len + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n);
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < n; ++m) {
            int k = 2 * i - m;
            if (k >= 0 && k <= len) a(i, m) = M_SQRT2 * h[k];
        }
        a(i, i) -= 1.0;
    }
    a.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    Eigen::VectorXd v = a.colPivHouseholderQr().solve(rhs);
    return std::vector<double>(v.data(), v.data() + n);
}

}  // namespace

std::shared_ptr<const WaveletSystem> WaveletSystem::daubechies3(int cascade_depth) {
    if (cascade_depth < 1 || cascade_depth > 20) {
        throw ValidationError("cascade depth must be in [1, 20]");
    }
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const WaveletSystem>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(cascade_depth);
    if (it != cache.end()) return it->second;

    std::shared_ptr<WaveletSystem> w(new WaveletSystem());
    w->family_ = WaveletFamily::daubechies3;
    w->depth_ = cascade_depth;
    w->filter_ = {0.3326705529509569, 0.8068915093133388,  0.4598775021193313,
                  -0.1350110200102546, -0.0854412738822415, 0.0352262918821007};
    const auto& h = w->filter_;
    int len = static_cast<int>(h.size()) - 1;
    w->support_ = len;

    // Cascade: phi(m / 2^d) = sqrt(2) sum_k h_k phi((m - k 2^{d-1}) / 2^{d-1}).
    std::vector<double> table = integer_values(h);
    for (int d = 1; d <= cascade_depth; ++d) {
        long half = 1L << (d - 1);
        long size = len * (1L << d) + 1;
        std::vector<double> next(size, 0.0);
        for (long m = 0; m < size; ++m) {
            double s = 0.0;
            for (int k = 0; k <= len; ++k) {
                long idx = m - k * half;
                if (idx >= 0 && idx < static_cast<long>(table.size())) s += h[k] * table[idx];
            }
            next[m] = M_SQRT2 * s;
        }
        table.swap(next);
    }
    long res = 1L << cascade_depth;
    // psi(x) = sqrt(2) sum_k g_k phi(2x - k), g_k = (-1)^k h_{len-k}.
    std::vector<double> psi(table.size(), 0.0);
    for (long m = 0; m < static_cast<long>(psi.size()); ++m) {
        double s = 0.0;
        for (int k = 0; k <= len; ++k) {
            long idx = 2 * m - k * res;
            if (idx >= 0 && idx < static_cast<long>(table.size())) {
                s += ((k % 2) ? -1.0 : 1.0) * h[len - k] * table[idx];
            }
        }
        psi[m] = M_SQRT2 * s;
    }
    w->phi_table_ = std::move(table);
    w->psi_table_ = std::move(psi);
    w->compute_theta();
    w->build_cumulative();
    cache.emplace(cascade_depth, w);
    return w;
}

std::shared_ptr<const WaveletSystem> WaveletSystem::make(WaveletFamily family) {
    return family == WaveletFamily::haar ? haar() : daubechies3();
}

void WaveletSystem::compute_theta() {
    long res = 1L << depth_;
    int len = static_cast<int>(support_);
    theta_phi_ = theta_psi_ = 0.0;
    for (long m = 0; m < res; ++m) {
        double sp = 0.0, ss = 0.0;
        for (int k = 0; k < len; ++k) {
            sp += std::abs(phi_table_[m + k * res]);
            ss += std::abs(psi_table_[m + k * res]);
        }
        theta_phi_ = std::max(theta_phi_, sp);
        theta_psi_ = std::max(theta_psi_, ss);
    }
}

double WaveletSystem::table_lookup(const std::vector<double>& table, double x) const {
    if (!(x > 0.0) || !(x < support_)) return 0.0;
    double pos = x * static_cast<double>(1L << depth_);
    long i = static_cast<long>(pos);
    if (i >= static_cast<long>(table.size()) - 1) return table.back();
    double t = pos - static_cast<double>(i);
    return table[i] + t * (table[i + 1] - table[i]);
}

void WaveletSystem::build_cumulative() {
    double h = 1.0 / static_cast<double>(1L << depth_);
    auto run = [h](const std::vector<double>& t) {
        std::vector<double> c(t.size(), 0.0);
        for (std::size_t i = 1; i < t.size(); ++i) c[i] = c[i - 1] + 0.5 * h * (t[i - 1] + t[i]);
        return c;
    };
    phi_cumulative_ = run(phi_table_);
    psi_cumulative_ = run(psi_table_);
}

double WaveletSystem::cumulative_lookup(const std::vector<double>& table,
                                        const std::vector<double>& cumulative, double x) const {
    if (!(x > 0.0)) return 0.0;
    if (!(x < support_)) return cumulative.back();
    double pos = x * static_cast<double>(1L << depth_);
    long i = static_cast<long>(pos);
    if (i >= static_cast<long>(table.size()) - 1) return cumulative.back();
    double t = pos - static_cast<double>(i);
    double v = table[i] + t * (table[i + 1] - table[i]);
    return cumulative[i] + 0.5 * t / static_cast<double>(1L << depth_) * (table[i] + v);
}

double WaveletSystem::phi_integral(double x) const {
    if (family_ == WaveletFamily::haar) return std::clamp(x, 0.0, 1.0);
    return cumulative_lookup(phi_table_, phi_cumulative_, x);
}

double WaveletSystem::psi_integral(double x) const {
    if (family_ == WaveletFamily::haar) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return x < 0.5 ? x : 1.0 - x;
    }
    return cumulative_lookup(psi_table_, psi_cumulative_, x);
}

double WaveletSystem::phi(double x) const {
    if (family_ == WaveletFamily::haar) return (x >= 0.0 && x < 1.0) ? 1.0 : 0.0;
    return table_lookup(phi_table_, x);
}

double WaveletSystem::psi(double x) const {
    if (family_ == WaveletFamily::haar) {
        if (x >= 0.0 && x < 0.5) return 1.0;
        if (x >= 0.5 && x < 1.0) return -1.0;
        return 0.0;
    }
    return table_lookup(psi_table_, x);
}

double WaveletCoefficients::a(int k) const {
    if (k < father.k_min || k > father.k_max()) return 0.0;
    return father.values[k - father.k_min];
}

double WaveletCoefficients::b(int j, int k) const {
    if (j < 0 || j >= static_cast<int>(details.size())) return 0.0;
    const auto& blk = details[j];
    if (k < blk.k_min || k > blk.k_max()) return 0.0;
    return blk.values[k - blk.k_min];
}

std::size_t WaveletCoefficients::count() const {
    std::size_t n = father.values.size();
    for (const auto& d : details) n += d.values.size();
    return n;
}

std::uint64_t WaveletCoefficients::fingerprint() const {
    auto mix = [](const CoefficientBlock& blk, std::uint64_t h) {
        int head[2] = {blk.level, blk.k_min};
        h = fnv1a(head, sizeof head, h);
        return blk.values.empty() ? h : fnv1a(blk.values.data(), blk.values.size() * sizeof(double), h);
    };
    double params[2] = {s, L};
    std::uint64_t h = fnv1a(params, sizeof params);
    h = fnv1a(&max_level, sizeof max_level, h);
    h = mix(father, h);
    for (const auto& d : details) h = mix(d, h);
    return h;
}

double eta(int j, double s) { return std::exp2(-j * (s + 0.5)); }

double evaluate_expansion(const WaveletSystem& sys, const WaveletCoefficients& c, double x) {
    double supp = sys.support_length();
    double v = 0.0;
    int k_lo = std::max(c.father.k_min, static_cast<int>(std::ceil(x - supp)));
    int k_hi = std::min(c.father.k_max(), static_cast<int>(std::floor(x)));
    for (int k = k_lo; k <= k_hi; ++k) v += c.father.values[k - c.father.k_min] * sys.phi(x - k);
    for (const auto& blk : c.details) {
        if (blk.values.empty()) continue;
        double scale = static_cast<double>(1L << blk.level);
        double y = scale * x;
        int lo = std::max(blk.k_min, static_cast<int>(std::ceil(y - supp)));
        int hi = std::min(blk.k_max(), static_cast<int>(std::floor(y)));
        double s = 0.0;
        for (int k = lo; k <= hi; ++k) s += blk.values[k - blk.k_min] * sys.psi(y - k);
        v += std::sqrt(scale) * s;
    }
    return v;
}

double integrate_expansion(const WaveletSystem& sys, const WaveletCoefficients& c, double a,
                           double b) {
    if (a == b) return 0.0;
    if (a > b) return -integrate_expansion(sys, c, b, a);
    double supp = sys.support_length();
    double v = 0.0;
    int k_lo = std::max(c.father.k_min, static_cast<int>(std::ceil(a - supp)));
    int k_hi = std::min(c.father.k_max(), static_cast<int>(std::floor(b)));
    for (int k = k_lo; k <= k_hi; ++k) {
        v += c.father.values[k - c.father.k_min] * (sys.phi_integral(b - k) - sys.phi_integral(a - k));
    }
    for (const auto& blk : c.details) {
        if (blk.values.empty()) continue;
        double scale = static_cast<double>(1L << blk.level);
        double ya = scale * a, yb = scale * b;
        int lo = std::max(blk.k_min, static_cast<int>(std::ceil(ya - supp)));
        int hi = std::min(blk.k_max(), static_cast<int>(std::floor(yb)));
        double s = 0.0;
        for (int k = lo; k <= hi; ++k) {
            s += blk.values[k - blk.k_min] * (sys.psi_integral(yb - k) - sys.psi_integral(ya - k));
        }
        v += s / std::sqrt(scale);
    }
    return v;
}

HolderCertificate holder_certificate(const WaveletCoefficients& c) {
    HolderCertificate h;
    for (double a : c.father.values) h.father_sup = std::max(h.father_sup, std::abs(a));
    for (const auto& blk : c.details) {
        double m = 0.0;
        for (double b : blk.values) m = std::max(m, std::abs(b));
        h.detail_sup = std::max(h.detail_sup, m / eta(blk.level, c.s));
        h.w_norm += std::sqrt(std::ldexp(1.0, blk.level)) * m;
    }
    return h;
}

double expansion_sup_bound(const WaveletSystem& sys, const WaveletCoefficients& c) {
    auto h = holder_certificate(c);
    return sys.theta_phi() * h.father_sup + sys.theta_psi() * h.w_norm;
}

void write_coefficients_csv(const WaveletCoefficients& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << "level,shift,value\n";
    auto dump = [&](const CoefficientBlock& blk) {
        for (std::size_t i = 0; i < blk.values.size(); ++i) {
            out << blk.level << ',' << blk.k_min + static_cast<int>(i) << ','
                << format_real(blk.values[i]) << '\n';
        }
    };
    dump(c.father);
    for (const auto& d : c.details) dump(d);
}

WaveletCoefficients read_coefficients_csv(const std::string& path, double s, double L) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open coefficient file '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("level,shift,value", 0) != 0) {
        throw ValidationError("coefficient file must start with header level,shift,value");
    }
    std::map<int, std::map<int, double>> levels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, v;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, v)) {
            throw ValidationError("malformed coefficient line: " + line);
        }
        try {
            int level = std::stoi(a);
            if (level < -1) throw ValidationError("coefficient level must be >= -1");
            levels[level][std::stoi(b)] = std::stod(v);
        } catch (const std::logic_error&) {
            throw ValidationError("malformed coefficient line: " + line);
        }
    }
    auto block = [](int level, const std::map<int, double>& m) {
        CoefficientBlock blk;
        blk.level = level;
        if (m.empty()) return blk;
        blk.k_min = m.begin()->first;
        blk.values.assign(m.rbegin()->first - blk.k_min + 1, 0.0);
        for (const auto& [k, v] : m) blk.values[k - blk.k_min] = v;
        return blk;
    };
    WaveletCoefficients c;
    c.s = s;
    c.L = L;
    c.father = block(-1, levels[-1]);
    int top = levels.rbegin()->first;
    for (int j = 0; j <= top; ++j) c.details.push_back(block(j, levels[j]));
    c.max_level = std::max(0, top);
    return c;
}

}  // namespace ergodrift
