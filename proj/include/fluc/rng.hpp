#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fluc {

// Mixes a root seed, a stream name and an index into one 64-bit seed.
// Every random consumer in the simulator owns its own named substream, so
// two runs with the same root seed see identical environment randomness no
// matter what the other consumers draw.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a over the name
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    // splitmix64 finalizer over root ^ name-hash ^ index
    std::uint64_t z = root + 0x9e3779b97f4a7c15ull * (h ^ (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled distributions. The standard library engines are
// bit-reproducible but its distributions are not, so uniform/normal/poisson
// are implemented here to keep the metrics byte-identical per seed.
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0)
        : engine_(substream_seed(root, stream, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n), rejection sampled to avoid modulo bias
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    double normal(double mean, double sigma) {
        // Box-Muller, fresh pair per call (no cached spare)
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Knuth inversion; fine for the small per-TTI arrival rates used here
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // k distinct indices in [0, n), partial Fisher-Yates
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        if (k > n) k = n;
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace fluc
