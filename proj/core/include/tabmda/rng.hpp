#pragma once

#include <cstdint>

namespace tabmda {

/// splitmix64 step: add the golden gamma, then finalize. Used both as the
/// core PRNG transition and as the seed-derivation mix.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent seed stream for (base, salt): splitmix64(base XOR salt).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(base ^ salt);
}

/// Deterministic PRNG over a splitmix64 stream. std:: distributions are
/// avoided on purpose: their value mapping is implementation-defined, and
/// results here must not depend on the standard library build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, n); n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        std::uint64_t r = next_u64();
        while (r < threshold) r = next_u64();
        return r % n;
    }

    /// Standard normal via Box-Muller, with the usual cached spare.
    double next_normal();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tabmda
