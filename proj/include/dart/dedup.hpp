// Duplication-aware retention.
//
// Every token is scored by its cosine similarity to each pivot, the scores are
// reduced per token, and the budget keeps the tokens least duplicated by the
// pivots. The threshold is implied by the budget: tau is the highest
// aggregated duplication that survived, eps_eff the lowest that was pruned.
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dart/core.hpp"
#include "dart/pivot.hpp"

namespace dart {

/// k x n cosine similarities, row i against pivot i.
class DupMatrix {
public:
    DupMatrix(std::size_t k, std::size_t n) : k_(k), n_(n), values_(k * n, 0.0) {}

    std::size_t pivots() const noexcept { return k_; }
    std::size_t tokens() const noexcept { return n_; }
    double at(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
    double& at(std::size_t i, std::size_t j) noexcept { return values_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * n_, n_}; }

private:
    std::size_t k_;
    std::size_t n_;
    std::vector<double> values_;
};

struct RetentionResult {
    std::size_t n = 0;
    std::vector<std::size_t> retained;  // sorted, distinct
    PivotSet pivots;
    std::vector<double> agg_dup;  // per token; importance scores for that baseline; empty for random
    double tau = -std::numeric_limits<double>::infinity();
    double eps_eff = std::numeric_limits<double>::infinity();
    Aggregator aggregator = Aggregator::Max;
    Selection selection = Selection::Global;
};

DupMatrix dup_scores(const PivotSet& pivots, const TokenMatrix& tokens);

std::vector<double> aggregate_dup(const DupMatrix& dup, Aggregator aggregator);

/// Keeps every pivot plus the budget - (prunable pivots) prunable non-pivots
/// with the smallest aggregated duplication. Rows outside `prunable` pass
/// through. An empty mask means every row is prunable.
RetentionResult retain(const TokenMatrix& tokens, const PivotSet& pivots, std::span<const double> agg,
                       std::size_t budget, const std::vector<bool>& prunable = {});

/// Per-pivot variant: pivots take turns (in index order) pruning their most
/// duplicated remaining candidate until only the budget is left. tau and
/// eps_eff are still reported against `agg`.
RetentionResult retain_per_pivot(const TokenMatrix& tokens, const PivotSet& pivots,
                                 const DupMatrix& dup, std::span<const double> agg,
                                 std::size_t budget, const std::vector<bool>& prunable = {});

/// select_pivots -> dup_scores -> aggregate_dup -> retain.
RetentionResult dart_prune(const TokenMatrix& tokens, const AuxFeatures& aux,
                           const AttentionMap* attn, const ReductionConfig& cfg);

}  // namespace dart
