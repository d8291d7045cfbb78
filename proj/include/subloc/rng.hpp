#pragma once

// Reproducible random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions in <random> are not (their algorithms are
// implementation-defined), so the uniform, index and normal draws used by the
// library are written out here. Per-trial streams are seeded with SplitMix64
// mixes of (master seed, index, ...), so a trial's draws depend only on its
// coordinates and never on scheduling.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace subloc {

/// One SplitMix64 step: a bijective 64-bit finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for a sub-stream identified by a path of indices below `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t idx : path) {
        h = splitmix64(h ^ splitmix64(idx + 0xD1B54A32D192ED03ULL));
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    /// Unbiased uniform integer in [0, bound).
    std::uint64_t uniform_index(std::uint64_t bound) {
        const std::uint64_t reject_below = (0 - bound) % bound;  // 2^64 mod bound
        std::uint64_t x;
        do {
            x = engine_();
        } while (x < reject_below);
        return x % bound;
    }

    bool coin() { return (engine_() >> 63) != 0; }

    /// Standard normal draw (Marsaglia polar method, pairs cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace subloc
