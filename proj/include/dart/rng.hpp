// Reproducible random streams.
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded by four successive
// outputs of splitmix64 starting from the user seed. Bounded integers use
// rejection sampling on the full 64-bit output, so a draw in [0, bound) is
// unbiased and depends only on the stream. Gaussians use Box-Muller with the
// uniform u = (next() >> 11) * 2^-53; a pair (r cos t, r sin t) is produced per
// two uniforms and the sine half is served on the following call.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dart {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
    std::uint64_t next() noexcept;

private:
    std::uint64_t state_;
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next() noexcept;
    /// Uniform double in [0, 1).
    double uniform() noexcept;
    /// Uniform integer in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;
    double gaussian() noexcept;

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Seed for the i-th independent substream derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// `count` distinct elements of `population` via a partial Fisher-Yates
/// shuffle, in draw order. The population is taken by value and permuted.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> population,
                                                    std::size_t count, Rng& rng);

}  // namespace dart
