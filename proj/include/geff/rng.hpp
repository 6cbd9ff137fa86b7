#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace geff {

// Deterministic random stream. std::mt19937_64 output is pinned by the
// standard; the distributions below are implemented by hand so that a given
// seed produces identical values on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_mix_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection sampling keeps the distribution exact.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Derives an independent stream, e.g. per tile or per trial.
    Rng fork(std::uint64_t salt) const {
        std::uint64_t s = seed_mix_ ^ (salt * 0x9e3779b97f4a7c15ull + 0xbf58476d1ce4e5b9ull);
        s ^= s >> 30;
        s *= 0xbf58476d1ce4e5b9ull;
        s ^= s >> 27;
        s *= 0x94d049bb133111ebull;
        s ^= s >> 31;
        return Rng(s);
    }

    void reseed(std::uint64_t seed) {
        engine_.seed(seed);
        seed_mix_ = seed;
        have_spare_ = false;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_mix_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace geff
