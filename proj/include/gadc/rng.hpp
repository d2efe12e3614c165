#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

namespace gadc::rng {

// SplitMix64 step. Self-contained so that seeded runs are bit-identical
// across platforms and standard-library versions (std:: distributions are
// implementation-defined).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Named sub-streams. A single user-facing 64-bit seed fans out through
// derive(); adding a new purpose never shifts existing streams because each
// purpose owns a fixed constant.
enum class Stream : std::uint64_t {
    gaussian_noise    = 0x01,
    flip_noise        = 0x02,
    sbm_edges         = 0x03,
    sbm_features      = 0x04,
    sbm_split         = 0x05,
    structure_perturb = 0x06,
    head_init         = 0x07,
    dropout           = 0x08,
    noise_trial       = 0x09,
    split_shuffle     = 0x0A,
    random_graph      = 0x0B,
    generic           = 0x0C,
};

inline std::uint64_t derive(std::uint64_t base, Stream purpose, std::uint64_t index = 0) {
    std::uint64_t s = base;
    (void)splitmix64(s);
    s ^= 0xA0761D6478BD642Full * static_cast<std::uint64_t>(purpose);
    (void)splitmix64(s);
    s ^= 0xE7037ED1A0B428DBull * (index + 1);
    (void)splitmix64(s);
    return s;
}

class Engine {
public:
    explicit Engine(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; second deviate cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform integer in [0, n) by 128-bit multiply-shift. Bias is O(n/2^64).
    std::size_t uniform_below(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace gadc::rng
