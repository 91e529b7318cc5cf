#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dualloco::detail {

// splitmix64 finalizer; used to derive independent substreams from one seed.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Thin wrapper around mt19937_64 with hand-rolled bounded draws so sequences
// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Unbiased uniform draw from [0, bound), bound >= 1, by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw = engine_();
        while (draw >= limit) draw = engine_();
        return draw % bound;
    }

    bool coin() { return (engine_() >> 63) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

    // k distinct values from {0..range-1} via partial Fisher-Yates, returned
    // in ascending order.
    std::vector<std::uint64_t> sample_without_replacement(std::uint64_t range, std::size_t k);

private:
    std::mt19937_64 engine_;
};

inline std::vector<std::uint64_t> Rng::sample_without_replacement(std::uint64_t range,
                                                                  std::size_t k) {
    std::vector<std::uint64_t> pool(range);
    for (std::uint64_t i = 0; i < range; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t j = i + below(range - i);
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::uint64_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace dualloco::detail
