#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace hybridlab {

/// SplitMix64 finalizer applied to x + golden gamma.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of replication r under a master seed: splitmix64(master ^ r).
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t replication) noexcept {
    return splitmix64(master ^ replication);
}

/// Counter-based stream: draw k returns splitmix64(seed + k * gamma).
/// Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t out = splitmix64(state_);
        state_ += 0x9e3779b97f4a7c15ULL;
        return out;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exponential with the given rate by inversion.
    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

    /// Standard normal by Box-Muller (consumes two draws).
    double normal() noexcept {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace hybridlab
