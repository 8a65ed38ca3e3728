// Splittable counter-style random streams for reproducible Monte Carlo.
//
// Scheme (frozen, cross-checked by test vectors in tests/test_rng.cpp and
// documented in README.md):
//
//   mix64(z)  = SplitMix64 output function applied to z
//   state0(master, stream) = mix64(mix64(master) ^ (stream + 0xD1B54A32D192ED03))
//   output_i  = mix64_core(state0 + (i+1) * 0x9E3779B97F4A7C15)
//   uniform_i = (output_i >> 11) * 2^-53          in [0, 1)
//
// Every value is a pure function of (master_seed, stream_id, index), so
// replicas on disjoint stream ids reproduce bit-for-bit regardless of
// scheduling.
#pragma once

#include <cstdint>

namespace mcrelab {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_stream_state(std::uint64_t master_seed,
                                                   std::uint64_t stream_id) noexcept {
    return mix64(mix64(master_seed) ^ (stream_id + kStreamSalt));
}

class RngStream {
public:
    RngStream() = default;
    explicit constexpr RngStream(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 random bits.
    constexpr double next_uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0;
};

inline constexpr RngStream derive_stream(std::uint64_t master_seed,
                                         std::uint64_t stream_id) noexcept {
    return RngStream(derive_stream_state(master_seed, stream_id));
}

}  // namespace mcrelab
