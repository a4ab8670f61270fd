#include "ergodrift/rng.hpp"

#include <algorithm>

namespace ergodrift {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t key) const {
    return Rng(splitmix64(seed_ ^ splitmix64(key + 0x632BE59BD9B4E019ULL)));
}

double Rng::uniform() {
    // 53 random mantissa bits; never returns 1.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::categorical(const double* cumulative, std::size_t n) {
    double u = uniform() * cumulative[n - 1];
    auto it = std::upper_bound(cumulative, cumulative + n, u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative), n - 1);
}

}  // namespace ergodrift
