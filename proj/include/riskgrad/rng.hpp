#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace riskgrad {

// Splittable counter-free random streams.
//
// Every chain n of an ensemble draws from stream(master_seed, n), so results
// do not depend on how chains are scheduled across threads. The construction
// is fixed and documented because reproducibility of a run is part of the
// output contract:
//
//   state0 = splitmix64_mix(master_seed XOR (n+1) * 0x9E3779B97F4A7C15)
//
// and the four xoshiro256++ words are the first four outputs of a SplitMix64
// generator started at state0. Gaussian variates come from Box-Muller over
// 53-bit uniforms, filled in coordinate order; the spare variate is carried
// inside the stream. All of this is plain uint64 arithmetic plus libm, so a
// given build reproduces byte-identical runs at any thread count.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic 64-bit mix of a seed and a stream/program index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
    return splitmix64_next(s);
}

/// xoshiro256++ stream with Box-Muller Gaussian draws.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t sm = mix_seed(master_seed, stream_index);
        for (auto& w : state_) w = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard Gaussian variate.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = 1.0 - next_uniform();
        double u2 = next_uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace riskgrad
