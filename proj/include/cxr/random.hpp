#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cxr {

// std::uniform_int_distribution and std::shuffle are implementation-defined,
// so seeded protocol outputs would differ between standard libraries.
// mt19937_64's output sequence is fixed by the standard; these helpers only
// add an unbiased bounded draw on top of it.

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle of the first `count` positions: afterwards
/// items[0..count) is a uniform sample without replacement.
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t count, SeededRng& rng) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        using std::swap;
        swap(items[i], items[j]);
    }
}

template <typename T>
void shuffle(std::span<T> items, SeededRng& rng) {
    partial_shuffle(items, items.size(), rng);
}

/// splitmix64 finalizer; derives independent child seeds from (seed, index).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace cxr
