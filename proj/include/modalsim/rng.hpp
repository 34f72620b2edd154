// rng.hpp — counter-based SplitMix64 streams.
//
// Draw n of the stream with key k is splitmix64_finalize(k + (n + 1) * G),
// G = 0x9e3779b97f4a7c15, i.e. the n-th output of the SplitMix64 generator
// seeded with k. Because each draw is a pure function of (key, counter),
// trajectories are reproducible independent of execution order.
//
// Stream splitting: trajectory k of an ensemble with base seed s uses
// key_k = s XOR splitmix64_finalize(k).

#pragma once

#include <cstdint>

namespace modalsim::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return base_seed ^ splitmix64_finalize(index);
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    constexpr std::uint64_t draw(std::uint64_t n) const noexcept {
        return splitmix64_finalize(key_ + (n + 1) * kGolden);
    }
    std::uint64_t next_u64() noexcept { return draw(counter_++); }
    // Uniform on [0, 1) with 53 random bits.
    double next_uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t key_;
    std::uint64_t counter_{0};
};

}  // namespace modalsim::rng
