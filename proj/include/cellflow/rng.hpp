#pragma once
// Counter-splittable random streams: splitmix64 expands (seed, stream index)
// into xoshiro256++ state, Box-Muller turns uniforms into gaussians.

#include <cstdint>

namespace cellflow {

// Finalizer of splitmix64; also used to hash (seed, index) pairs into
// independent stream seeds.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic derived seed for logical stream `index` of a master seed.
// Evaluating the splitmix64 sequence at an offset keeps streams decorrelated
// without shared state.
inline uint64_t stream_split(uint64_t seed, uint64_t index) {
    return mix64(seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        auto next_sm = [&sm]() {
            sm += 0x9E3779B97F4A7C15ULL;
            uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            return z ^ (z >> 31);
        };
        for (auto& w : s_) w = next_sm();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    uint64_t next_u64() {
        uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    // Uniform on [0, 1): 53 random bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]: safe as a log() argument.
    double u01_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double gauss();

  private:
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace cellflow
