#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sws {

// Deterministic PRNG used throughout the pipeline. Standard-library
// distributions are implementation-defined, so all draws are derived here
// from raw splitmix64 output to keep runs byte-reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform index in [0, n). Modulo bias is negligible for the pool
    // sizes used here and keeps the draw sequence platform-stable.
    std::size_t next_index(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next_u64() % n); }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Box-Muller without cached spare so the draw count per call is fixed.
    double next_gaussian();

    // Binomial(n, p) by direct summation; n is small (rollout counts).
    int next_binomial(int n, double p) {
        int hits = 0;
        for (int i = 0; i < n; ++i)
            if (next_bernoulli(p)) ++hits;
        return hits;
    }

private:
    std::uint64_t state_;
};

// FNV-1a, the anchor for content-derived seeds.
std::uint64_t fnv1a(std::string_view text) noexcept;

// Mixes a base seed with a label so subcomponents get independent,
// reproducible streams regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept;

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to preallocated slots; the call itself imposes no ordering.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace sws
