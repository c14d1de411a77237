// Reference pruning rules: uniform random retention and attention-importance
// retention, plus a Monte-Carlo estimate of how much importance scores shift
// once part of the sequence is removed.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dart/core.hpp"
#include "dart/dedup.hpp"

namespace dart {

/// `budget` distinct indices drawn from Rng(seed), returned sorted.
RetentionResult random_prune(std::size_t n, std::size_t budget, std::uint64_t seed);

/// Keeps the `budget` highest scores, ties toward the lower index. tau is the
/// smallest retained score.
RetentionResult importance_prune(std::span<const double> scores, std::size_t budget);

struct BiasEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// F(i|X): column means of the map after renormalizing every row to sum 1.
std::vector<double> renormalized_received(const AttentionMap& attn);

/// Total score drift sum_{i in S} (F(i|S) - F(i|X)) for one retained subset,
/// where F is the attention received under the map restricted to S x S with
/// rows renormalized. Rows with no mass left inside S contribute nothing.
/// `full_scores` is F(.|X) from renormalized_received.
double subset_drift(const AttentionMap& attn, std::span<const std::size_t> subset,
                    std::span<const double> full_scores);

/// Monte-Carlo mean of subset_drift over `samples` uniformly drawn subsets of
/// size `budget`. Sample s draws from Rng(derive_seed(seed, s)).
BiasEstimate recalibration_bias(const AttentionMap& attn, std::size_t budget, std::size_t samples,
                                std::uint64_t seed);

/// Exact average over every subset of size `budget`; n <= 20.
BiasEstimate recalibration_bias_exhaustive(const AttentionMap& attn, std::size_t budget);

}  // namespace dart
