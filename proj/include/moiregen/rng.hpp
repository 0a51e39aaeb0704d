#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

// Seeded random streams with a fixed cross-platform bit contract.
//
// std::mt19937_64 output is pinned by the standard, but the std::*_distribution
// adapters are not; everything that turns engine words into numbers lives here
// so that a (seed, stream index) pair yields the same draws on any platform.

namespace moiregen {

using RngEngine = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Stream seed for item `index` under global `seed`. Two mixing rounds keep
// adjacent indices uncorrelated.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed;
    std::uint64_t a = detail::splitmix64(state);
    state = a ^ index;
    return detail::splitmix64(state);
}

inline RngEngine make_stream(std::uint64_t seed, std::uint64_t index) {
    return RngEngine(derive_stream_seed(seed, index));
}

// Uniform on [0,1) with 53-bit granularity.
inline double uniform_double(RngEngine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(RngEngine& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_double(rng);
}

// Uniform integer in [0, n). Masked rejection, unbiased; always consumes at
// least one engine word (stream-contract relevant).
inline std::uint64_t uniform_below(RngEngine& rng, std::uint64_t n) {
    if (n == 0)
        throw std::invalid_argument("uniform_below: n must be positive");
    if (n == 1) {
        rng();
        return 0;
    }
    const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(n - 1);
    for (;;) {
        std::uint64_t x = rng() & mask;
        if (x < n)
            return x;
    }
}

// Standard normal via Box-Muller (cosine branch); two words per draw.
inline double sample_normal(RngEngine& rng) {
    double u1 = 1.0 - uniform_double(rng); // (0,1], keeps log finite
    double u2 = uniform_double(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Gamma(alpha, 1) via Marsaglia-Tsang, with the alpha<1 boost.
inline double sample_gamma(RngEngine& rng, double alpha) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("sample_gamma: alpha must be > 0");
    if (alpha < 1.0) {
        double u = 1.0 - uniform_double(rng); // (0,1]
        return sample_gamma(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = sample_normal(rng);
        double t = 1.0 + c * x;
        if (t <= 0.0)
            continue;
        double v = t * t * t;
        double u = 1.0 - uniform_double(rng);
        if (u < 1.0 - 0.0331 * (x * x) * (x * x))
            return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

inline double sample_beta(RngEngine& rng, double a, double b) {
    double x = sample_gamma(rng, a);
    double y = sample_gamma(rng, b);
    return x / (x + y);
}

} // namespace moiregen
