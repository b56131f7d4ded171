#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace fakejob {

// splitmix64. The stream is part of the on-disk/cross-implementation
// contract: splits, bootstrap samples and initial weights are bit-exact
// functions of the seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform();
    }

    /// next() mod bound; bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Fisher–Yates: for i from n-1 down to 1, j = next() mod (i+1), swap.
template <typename T>
void fisher_yates(std::span<T> items, SplitMix64& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i >= 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(items[i], items[j]);
    }
}

}  // namespace fakejob
