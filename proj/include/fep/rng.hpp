#pragma once

#include <cstdint>
#include <cmath>


namespace fep {

// SplitMix64 finalizer; a bijection on 64-bit words, so distinct inputs map
// to distinct outputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Explicit random stream: xoshiro256++ seeded through SplitMix64. Doubles are
// produced from raw 64-bit draws so the sequence is identical everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s += 0x9E3779B97F4A7C15ULL);
    }

    std::uint64_t raw() {
        std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    // inverse-CDF exponential with the given rate
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

// Counter-based replica stream derivation: collision-free in the replica
// index because splitmix64 is injective at fixed master seed.
inline Rng replica_stream(std::uint64_t master_seed, std::uint64_t replica_index) {
    return Rng(splitmix64(master_seed) ^ splitmix64(replica_index + 0x51AFD51ED5AAC1E3ULL));
}

}  // namespace fep
