#pragma once

#include <cstdint>
#include <random>

namespace cgb {

// Every random quantity in a trial is drawn from its own stream so that,
// e.g., changing the attack never perturbs the noise sequence.
enum class StreamRole : std::uint64_t {
    Noise = 1,
    GpSample = 2,
    Ties = 3,
    Instance = 4,
};

// 64-bit Mersenne Twister; seeds come from derive_seed below.
using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// seed = splitmix64(splitmix64(splitmix64(base) ^ trial) ^ role)
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, StreamRole role) noexcept {
    std::uint64_t s = detail::splitmix64(base);
    s = detail::splitmix64(s ^ trial);
    return detail::splitmix64(s ^ static_cast<std::uint64_t>(role));
}

inline Rng make_stream(std::uint64_t base, std::uint64_t trial, StreamRole role) {
    return Rng(derive_seed(base, trial, role));
}

}  // namespace cgb
