#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace relq {

// 64-bit FNV-1a, used to derive named RNG streams from a master seed.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d9ecca9b793491ull;
    return x ^ (x >> 31);
}

// Seed of the named sub-stream of a master seed. Streams with different
// names are statistically independent; the derivation is fixed:
// stream_seed = splitmix64(master_seed ^ fnv1a64(name)).
inline uint64_t stream_seed(uint64_t master_seed, std::string_view name) {
    return splitmix64(master_seed ^ fnv1a64(name));
}

// Deterministic RNG. Uniform draws are produced directly from the engine
// output so results do not depend on libstdc++ distribution internals.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    static Rng stream(uint64_t master_seed, std::string_view name) {
        return Rng(stream_seed(master_seed, name));
    }

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n), n > 0. Rejection-free modulo bias is
    // negligible for the small n used here, but use Lemire reduction anyway.
    uint64_t uniform_index(uint64_t n) {
        __uint128_t m = static_cast<__uint128_t>(engine_()) * n;
        return static_cast<uint64_t>(m >> 64);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace relq
