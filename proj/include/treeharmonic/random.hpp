#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

namespace treeharmonic {

/**
 * Counter-based generator: draw k of stream `seed` is splitmix64(seed + k * golden).
 *
 * The output sequence is fixed by the seed alone (no implementation-defined
 * distribution objects), so sampled experiments are byte-reproducible across
 * standard libraries.
 */
class counter_rng {
public:
    explicit counter_rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept :
        state_{seed ^ (stream * 0xD1B54A32D192ED03ULL)} {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31U);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double unit() noexcept { return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * unit(); }

    /// Uniform on (0, hi].
    double positive(double hi) noexcept { return hi * (1.0 - unit()); }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept {
        // multiply-shift; bias is < 2^-64 * bound, irrelevant at our sizes
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64U);
    }

    /// Standard exponential variate.
    double exponential() noexcept { return -std::log(1.0 - unit()); }

    template <typename T>
    void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace treeharmonic
