#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace distrag::detail {

// Seeded generator with a platform-independent bounded draw. std::mt19937_64
// output is fully specified by the standard; the distributions are not, so
// bounded draws are done here instead of with std::uniform_int_distribution.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // uniform in [0, n), unbiased via rejection
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    bool coin() { return (engine_() & 1u) != 0; }

    // Fisher-Yates; the first k selections are identical for any two runs
    // that share a seed, regardless of how far the shuffle proceeds.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        partial_shuffle(v, v.size());
    }

    template <typename T>
    void partial_shuffle(std::vector<T>& v, size_t k) {
        const size_t n = v.size();
        if (k > n) k = n;
        for (size_t i = 0; i + 1 < n && i < k; ++i) {
            size_t j = i + static_cast<size_t>(below(n - i));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace distrag::detail
