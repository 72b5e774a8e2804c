// Deterministic random source shared by every stochastic step of the
// pipeline (splits, shuffles, weight init, noise draws, synthesis).
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded from the 64-bit
// seed via four outputs of splitmix64. Both algorithms are fixed here so a
// given (seed, stream, call sequence) produces identical values on every
// platform. Substreams are derived with splitmix64 as well: the child seed
// for stream k is the (k+1)-th output of a splitmix64 sequence initialized
// with the parent seed.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bpad {

namespace detail {

inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += kSplitmixGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64_next(sm);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result =
            detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Plain modulo; the bias is ~n/2^64 and the
    // mapping is identical everywhere, which is what reproducibility needs.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (cosine branch). Consumes two uniforms
    // per call; the sine companion is discarded so the call sequence stays
    // one-draw-per-value.
    double next_gaussian() {
        const double u1 = 1.0 - next_uniform(); // (0, 1], keeps log finite
        const double u2 = next_uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Independent substream; see header comment for the derivation rule.
    Rng derive(std::uint64_t stream_id) const {
        std::uint64_t sm = seed_;
        std::uint64_t child = 0;
        for (std::uint64_t i = 0; i <= stream_id; ++i) {
            child = detail::splitmix64_next(sm);
        }
        return Rng(child);
    }

  private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

// Fixed stream ids so independent pipeline stages never share a sequence.
namespace rng_stream {
inline constexpr std::uint64_t kSplit = 0;
inline constexpr std::uint64_t kPoolShuffle = 1;
inline constexpr std::uint64_t kWeightInit = 2;
inline constexpr std::uint64_t kTrainShuffle = 3;
inline constexpr std::uint64_t kLatentNoise = 4;
inline constexpr std::uint64_t kSynthRecordBase = 1000;
} // namespace rng_stream

} // namespace bpad
