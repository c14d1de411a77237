// Synthetic token sets and an unoptimized reference pruner used as a test
// oracle.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dart/core.hpp"
#include "dart/dedup.hpp"

namespace dart::synth {

struct ClusteredTokens {
    TokenMatrix tokens;
    std::vector<std::size_t> labels;  // cluster of each row (round-robin)
};

struct ClusteredParams {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t clusters = 1;
    double spread = 0.0;
    std::uint64_t seed = 0;
    bool normalize = true;
};

/// Unit-norm centers from normalized Gaussians, then
/// token = normalize(center + spread * gaussian). Draw order: all centers,
/// then tokens in row order.
ClusteredTokens gen_clustered(const ClusteredParams& params);

struct OversmoothedParams {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t steps = 0;
    double mixing = 0.0;
    std::uint64_t seed = 0;
    bool normalize = true;
};

/// i.i.d. Gaussian rows, `steps` rounds of x_i <- (1 - mixing) x_i + mixing * mean,
/// then rows scaled to unit norm.
TokenMatrix gen_oversmoothed(const OversmoothedParams& params);

/// Four 2-d tokens where pruning leaves eps_eff = 0.9 but a pruned token of
/// norm 0.01 sits 0.99 from its pivot: the equal-norm radius sqrt(0.2) fails,
/// the per-pair inequality holds. Prune with embed-l2-max, k = 1, budget = 2.
TokenMatrix unequal_norm_counterexample();
ReductionConfig counterexample_config();

inline constexpr std::size_t kBruteForceLimit = 256;

/// Literal re-evaluation of the duplication pruner: scalar loops, full stable
/// sorts, explicit tie-breaking. Must agree exactly with dart_prune.
RetentionResult brute_force_prune(const TokenMatrix& tokens, const AuxFeatures& aux,
                                  const AttentionMap* attn, const ReductionConfig& cfg);

}  // namespace dart::synth
