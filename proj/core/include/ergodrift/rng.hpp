#pragma once

#include <cstdint>
#include <random>

namespace ergodrift {

/// Seedable random stream. Child streams are derived by hashing (seed, key)
/// with SplitMix64, so replications and chains never share state.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }
    /// Independent stream for `key`; deterministic in (seed(), key).
    Rng split(std::uint64_t key) const;

    double uniform();                          ///< [0, 1)
    double uniform(double a, double b);
    double normal();
    std::size_t categorical(const double* cumulative, std::size_t n);  ///< cumulative[n-1] == total

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ergodrift
