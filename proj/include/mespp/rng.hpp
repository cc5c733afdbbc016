#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mespp/common.hpp"

namespace mespp {

// Deterministic RNG for simulation and scenario generation.
//
// std::mt19937_64's output sequence is fully specified by the standard; the
// draw helpers below replace std::*_distribution, whose outputs differ
// between standard libraries. Same seed, same platform-independent stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) {
            // Never fires, but keep the stream position independent of p.
            next_double();
            return false;
        }
        return next_double() < p;
    }

    // Unbiased uniform integer in [0, bound), rejection sampling.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw ValidationError("Rng::next_below: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    int uniform_int(int lo, int hi) {
        if (lo > hi) throw ValidationError("Rng::uniform_int: empty range");
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Box-Muller, no spare caching so each call consumes exactly two draws.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Sample k distinct elements from `pool`, preserving no particular order.
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k) {
        if (k > pool.size()) throw ValidationError("sample_without_replacement: k exceeds pool size");
        std::vector<T> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(next_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
};

// splitmix64 step; used to derive independent sub-stream seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace mespp
