// Pivot selection: the small representative subset every token is compared
// against.
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dart/core.hpp"

namespace dart {

struct PivotSet {
    std::vector<std::size_t> indices;  // sorted, distinct
    PivotStrategy strategy;
    std::optional<std::vector<double>> scores;  // aligned with indices; empty for Random

    std::size_t size() const noexcept { return indices.size(); }
};

/// Per-row L1 or L2 norm.
std::vector<double> row_norms(const TokenMatrix& matrix, NormOrder order);

/// Mean attention received by each token: the column means of a
/// row-stochastic map. Throws NotRowStochastic.
std::vector<double> attention_received(const AttentionMap& attn);

/// Selection score per token for a score-based strategy.
std::vector<double> pivot_scores(const TokenMatrix& tokens, const AuxFeatures& aux,
                                 const AttentionMap* attn, const PivotStrategy& strategy);

/// Picks cfg.pivot_count pivots. Random draws from Rng(cfg.seed); score-based
/// strategies take the top or bottom k with ties toward the lower index. With
/// a modality quota each modality is selected independently (visual first).
PivotSet select_pivots(const TokenMatrix& tokens, const AuxFeatures& aux,
                       const AttentionMap* attn, const ReductionConfig& cfg);

}  // namespace dart
