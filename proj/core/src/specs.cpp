#include "ergodrift/specs.hpp"

#include <cmath>

#include "ergodrift/errors.hpp"
#include "ergodrift/wavelet.hpp"

namespace ergodrift {
namespace {

using json = nlohmann::json;

template <typename T>
T need(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
    return j.at(key).get<T>();
}

Drift drift_impl(const json& j) {
    if (!j.is_object()) throw ValidationError("drift spec must be an object");
    auto kind = need<std::string>(j, "kind");
    if (kind == "zero") return drifts::zero();
    if (kind == "constant") return drifts::constant(need<double>(j, "value"));
    if (kind == "ou") return drifts::ornstein_uhlenbeck(j.value("theta", 1.0), j.value("mean", 0.0));
    if (kind == "tanh") return drifts::tanh_restoring(need<double>(j, "scale"), j.value("width", 1.0));
    if (kind == "tanh_sines") {
        return drifts::tanh_with_sines(need<double>(j, "scale"), j.value("width", 1.0),
                                       need<std::vector<double>>(j, "amplitudes"),
                                       need<std::vector<double>>(j, "frequencies"),
                                       need<std::vector<double>>(j, "phases"));
    }
    if (kind == "bump") {
        return drifts::with_bump(drift_impl(need<json>(j, "base")), need<double>(j, "amplitude"),
                                 j.value("center", 0.0), need<double>(j, "half_width"),
                                 j.value("sharpness", 4.0));
    }
    if (kind == "tail_extended") return tail_extend(drift_impl(need<json>(j, "base")), need<double>(j, "m"));
    if (kind == "wavelet") {
        auto sys = WaveletSystem::make(wavelet_family_from_string(j.value("family", "daubechies3")));
        auto coeffs = read_coefficients_csv(need<std::string>(j, "coefficients"), j.value("s", 0.5),
                                            j.value("L", 1.0));
        return wavelet_drift(sys, std::move(coeffs), need<double>(j, "m"));
    }
    if (kind == "wavelet_draw") {
        auto spec = wavelet_prior_from_json(j.value("prior", json::object()));
        Rng rng(need<std::uint64_t>(j, "seed"));
        return draw_wavelet_prior(spec, rng);
    }
    throw ValidationError("unknown drift kind '" + kind + "'");
}

}  // namespace

Drift drift_from_json(const json& j) {
    try {
        return drift_impl(j);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("drift spec: ") + e.what());
    }
}

Prior shift_family_prior(double theta, double m, double shift_lo, double shift_hi) {
    if (!(shift_lo <= shift_hi)) throw ValidationError("shift_family needs shift_lo <= shift_hi");
    if (!(theta > 0.0) || !(m > 0.0)) throw ValidationError("shift_family needs theta > 0 and m > 0");
    Prior p;
    p.kind = "shift_family";
    p.sampler = [=](Rng& rng) {
        double c = rng.uniform(shift_lo, shift_hi);
        return tail_extend(drifts::ornstein_uhlenbeck(theta, c), m);
    };
    return p;
}

Prior prior_from_json(const json& j) {
    try {
        auto kind = need<std::string>(j, "kind");
        Prior p;
        p.kind = kind;
        if (kind == "point_mass") {
            p.net = NetPriorSpec::from_atoms({drift_from_json(need<json>(j, "drift"))}, {1.0});
        } else if (kind == "net") {
            std::vector<Drift> drifts;
            std::vector<double> probs;
            for (const auto& a : need<json>(j, "atoms")) {
                drifts.push_back(drift_from_json(need<json>(a, "drift")));
                probs.push_back(need<double>(a, "probability"));
            }
            p.net = NetPriorSpec::from_atoms(drifts, probs);
        } else if (kind == "net_build") {
            auto spec = wavelet_prior_from_json(j.value("wavelet", json::object()));
            NetBuildParams params;
            params.p_m = need<std::vector<double>>(j, "p_m");
            params.q_n = need<std::vector<double>>(j, "q_n");
            params.epsilons = need<std::vector<double>>(j, "epsilons");
            params.candidates_per_net = j.value("candidates_per_net", params.candidates_per_net);
            params.atom_budget = j.value("atom_budget", params.atom_budget);
            Rng rng(j.value("seed", std::uint64_t{0}));
            p.net = build_net_prior(wavelet_family(spec), params, rng);
            p.wavelet = spec;
        } else if (kind == "wavelet") {
            p.wavelet = wavelet_prior_from_json(j.value("spec", j));
            auto spec = *p.wavelet;
            p.sampler = [spec](Rng& rng) { return draw_wavelet_prior(spec, rng); };
            return p;
        } else if (kind == "shift_family") {
            return shift_family_prior(j.value("theta", 1.0), need<double>(j, "m"), need<double>(j, "shift_lo"),
                                      need<double>(j, "shift_hi"));
        } else {
            throw ValidationError("unknown prior kind '" + kind + "'");
        }
        auto net = *p.net;
        p.sampler = [net](Rng& rng) { return draw_net_prior(net, rng); };
        return p;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("prior spec: ") + e.what());
    }
}

}  // namespace ergodrift
