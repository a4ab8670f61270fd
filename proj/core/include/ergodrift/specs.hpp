#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ergodrift/drift.hpp"
#include "ergodrift/posterior.hpp"
#include "ergodrift/priors.hpp"

namespace ergodrift {

/// Builds a drift from its JSON description. Supported kinds: zero, constant,
/// ou, tanh, tanh_sines, bump, tail_extended, wavelet (coefficient CSV),
/// wavelet_draw (a seeded draw from a wavelet prior).
Drift drift_from_json(const nlohmann::json& j);

/// A prior as used by the experiment harness. Discrete priors (point mass and
/// net priors) get exact posteriors; continuous ones are sampled.
struct Prior {
    std::string kind;
    std::optional<NetPriorSpec> net;
    std::optional<WaveletPriorSpec> wavelet;
    PriorSampler sampler;

    bool is_discrete() const noexcept { return net.has_value(); }
};

/// Supported kinds: point_mass, net, net_build, wavelet, shift_family.
Prior prior_from_json(const nlohmann::json& j);

/// Tail-extended OU drifts centred at c ~ U[shift_lo, shift_hi].
Prior shift_family_prior(double theta, double m, double shift_lo, double shift_hi);

}  // namespace ergodrift
