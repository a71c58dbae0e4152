#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace gp {

// SplitMix64. Used everywhere instead of <random> engines/distributions so
// that seeded runs produce identical streams across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Rejection-free is not required; rejection keeps
    // the draw unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Random permutation of [0, n).
    std::vector<std::int64_t> permutation(std::int64_t n) {
        std::vector<std::int64_t> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), std::int64_t{0});
        shuffle(p);
        return p;
    }

    // Random derangement of [0, n): permutation with no fixed point.
    // Resamples until fixed-point free; expected tries converge to e.
    std::vector<std::int64_t> derangement(std::int64_t n) {
        for (;;) {
            auto p = permutation(n);
            bool ok = true;
            for (std::int64_t i = 0; i < n; ++i) {
                if (p[static_cast<std::size_t>(i)] == i) { ok = false; break; }
            }
            if (ok || n < 2) return p;
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace gp
