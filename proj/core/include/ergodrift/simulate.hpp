#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergodrift/diffusion.hpp"
#include "ergodrift/drift.hpp"
#include "ergodrift/rng.hpp"
#include "ergodrift/transition.hpp"

namespace ergodrift {

struct Provenance {
    std::string drift_label;
    std::uint64_t drift_fingerprint = 0;
    std::uint64_t seed = 0;
    double fine_step = 0.0;
    std::string generator;  ///< "euler" or "grid_chain"
};

/// Sampling interval plus the chain X_0, X_Delta, ..., X_{n Delta}.
struct ObservationRecord {
    double delta_t = 0.0;
    std::vector<double> observations;
    Provenance provenance;

    /// Number of transitions n (observations.size() - 1).
    int transitions() const noexcept { return static_cast<int>(observations.size()) - 1; }
    /// First n transitions (n + 1 points).
    ObservationRecord prefix(int n) const;
    void validate() const;
};

struct PathSample {
    std::vector<double> times;
    std::vector<double> states;
};

/// Inverse-CDF sampler for a grid density, linear CDF interpolation within cells.
class StationarySampler {
public:
    explicit StationarySampler(const InvariantDensity& pi);
    double operator()(Rng& rng) const;

private:
    SpatialGrid grid_;
    std::vector<double> cdf_;
};

double sample_stationary(const InvariantDensity& pi, Rng& rng);

/// Euler-Maruyama: X_{k+1} = X_k + b(X_k) dt + sqrt(dt) Z_k. With `noise` false the
/// increments are deterministic (ODE test hook).
PathSample simulate_path(const Drift& b, double x0, double horizon, double fine_step, Rng& rng,
                         bool noise = true);

/// Advances one state over `span` with Euler steps of at most fine_step.
double euler_advance(const Drift& b, double x, double span, double fine_step, Rng& rng);

/// X_0 ~ pi, then Euler segments of length delta_t. fine_step <= 0 selects delta_t / 200.
ObservationRecord discrete_observations(const Drift& b, const InvariantDensity& pi, double delta_t,
                                        int n, double fine_step, Rng& rng);

/// Samples the grid Markov chain from kernel rows, initial node from pi's cell
/// masses; reported states are jittered uniformly within their cells.
ObservationRecord grid_chain_observations(const TransitionKernel& k, const InvariantDensity& pi,
                                          int n, Rng& rng, bool jitter = true);

/// CSV with header `index,time,value`, values printed with 17 significant digits.
void write_observations_csv(const ObservationRecord& rec, const std::string& path);
/// Provenance sidecar (JSON).
void write_observations_metadata(const ObservationRecord& rec, const std::string& path);
/// Reads a CSV written by write_observations_csv; delta_t is recovered from the time column.
ObservationRecord read_observations_csv(const std::string& path);

/// 17-significant-digit rendering shared by every CSV writer.
std::string format_real(double v);

}  // namespace ergodrift
