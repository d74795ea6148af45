#pragma once

#include <cstdint>

namespace fbp {

/// SplitMix64 step; used to expand seeds into independent streams.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Seeded through SplitMix64 so any 64-bit
/// seed yields a well-mixed state. This is the one PRNG behind phantom
/// sampling, noise, shuffling and random init; fixing the algorithm keeps
/// generated datasets byte-stable for a given seed.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    uint64_t next_below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller (one value per call, no caching so the
    /// stream position stays predictable).
    double normal();

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

/// Poisson draw. Knuth's product method below mean 10, Hörmann's PTRS
/// transformed rejection above; both consume only this RNG so results do not
/// depend on the standard library.
int64_t poisson_draw(Xoshiro256pp& rng, double mean);

}  // namespace fbp
