#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace abst {

// Deterministic RNG wrapper. We avoid std::*_distribution because their
// output sequences are implementation-defined; these helpers pin the exact
// bits so seeded runs stay byte-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // [0, 1), 53 bits
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    int uniform_int(int n) {
        const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % static_cast<std::uint64_t>(n));
        std::uint64_t v;
        do { v = eng_(); } while (v >= bound);
        return static_cast<int>(v % static_cast<std::uint64_t>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller
    double normal() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(th);
        have_cache_ = true;
        return r * std::cos(th);
    }

    // splitmix64 of (seed, stream) for independent substreams
    static std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
    bool have_cache_ = false;
    double cache_ = 0.0;
};

} // namespace abst
