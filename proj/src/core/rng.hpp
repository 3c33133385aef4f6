#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace linecolor {

// xoshiro256++ with splitmix64 seeding. Self-contained so that seeded runs are
// reproducible across standard library versions; std::normal_distribution is
// implementation-defined and would break bit-level determinism contracts.
struct Rng {
    std::array<std::uint64_t, 4> s{};
    std::uint64_t seed_value = 0;

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97f4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    explicit Rng(std::uint64_t seed = 0) : seed_value(seed) {
        std::uint64_t x = seed;
        for (auto& si : s) si = splitmix64(x);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t next_u64() {
        std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53-bit resolution.
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    // Box-Muller, cosine branch only; one draw is a pure function of the state.
    double normal() {
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Deterministic child stream, independent of how much the parent has consumed.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t x = seed_value ^ (0xA24BAED4963EE407ULL * (stream + 1));
        return Rng(splitmix64(x));
    }

    Rng fork(std::string_view tag) const {
        std::uint64_t hashed = 0xCBF29CE484222325ULL;  // FNV-1a
        for (char c : tag) {
            hashed ^= static_cast<unsigned char>(c);
            hashed *= 0x100000001B3ULL;
        }
        return fork(hashed);
    }
};

}  // namespace linecolor
