#include "dart/dedup.hpp"

#include <algorithm>
#include <string>

#include "dart/numeric.hpp"
#include "dart/topk.hpp"

namespace dart {

namespace {

// Dot products of x against rows[0..count), four rows per pass over x.
DART_MULTIVERSION
void dot_many(std::span<const float> x, const float* const* rows, std::size_t count, double* out) {
    std::size_t r = 0;
    for (; r + 4 <= count; r += 4) {
        const float* const block[4] = {rows[r], rows[r + 1], rows[r + 2], rows[r + 3]};
        double res[4];
        numeric::dot_rows<4>(x, block, res);
        std::copy(res, res + 4, out + r);
    }
    for (; r < count; ++r) {
        const float* const block[1] = {rows[r]};
        double res[1];
        numeric::dot_rows<1>(x, block, res);
        out[r] = res[0];
    }
}

}  // namespace

DupMatrix dup_scores(const PivotSet& pivots, const TokenMatrix& tokens) {
    const std::size_t k = pivots.size();
    const std::size_t n = tokens.n();
    DupMatrix out(k, n);
    std::vector<double> pivot_sq(k);
    for (std::size_t i = 0; i < k; ++i) {
        pivot_sq[i] = numeric::squared_norm(tokens.row(pivots.indices[i]));
    }
    // Token-major: each row is read once, against every pivot and itself.
    std::vector<const float*> rows(k + 1);
    for (std::size_t i = 0; i < k; ++i) rows[i] = tokens.row(pivots.indices[i]).data();
    std::vector<double> dots(k + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const auto x = tokens.row(j);
        rows[k] = x.data();
        dot_many(x, rows.data(), k + 1, dots.data());
        const double x_sq = dots[k];
        for (std::size_t i = 0; i < k; ++i) {
            out.at(i, j) = numeric::cosine_from_parts(dots[i], pivot_sq[i], x_sq);
        }
    }
    return out;
}

std::vector<double> aggregate_dup(const DupMatrix& dup, Aggregator aggregator) {
    const std::size_t k = dup.pivots();
    const std::size_t n = dup.tokens();
    if (k == 0) throw Error(ErrorCode::BadParams, "aggregation needs at least one pivot");
    std::vector<double> out(dup.row(0).begin(), dup.row(0).end());
    for (std::size_t i = 1; i < k; ++i) {
        const auto r = dup.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            switch (aggregator) {
                case Aggregator::Max: out[j] = std::max(out[j], r[j]); break;
                case Aggregator::Min: out[j] = std::min(out[j], r[j]); break;
                case Aggregator::Mean: out[j] += r[j]; break;
            }
        }
    }
    if (aggregator == Aggregator::Mean) {
        for (double& v : out) v /= static_cast<double>(k);
    }
    return out;
}

namespace {

struct Partition {
    std::vector<bool> is_pivot;
    std::vector<std::size_t> candidates;  // prunable non-pivots
    std::size_t prunable_pivots = 0;
    std::size_t prunable = 0;
};

Partition partition(std::size_t n, const PivotSet& pivots, const std::vector<bool>& prunable) {
    Partition p;
    p.is_pivot.assign(n, false);
    for (std::size_t i : pivots.indices) {
        if (i >= n) throw Error(ErrorCode::BadParams, "pivot index out of range");
        p.is_pivot[i] = true;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const bool can_prune = prunable.empty() || prunable[j];
        if (!can_prune) continue;
        ++p.prunable;
        if (p.is_pivot[j]) {
            ++p.prunable_pivots;
        } else {
            p.candidates.push_back(j);
        }
    }
    return p;
}

void check_budget(std::size_t budget, std::size_t k, const Partition& p) {
    if (budget < k || budget > p.prunable || budget < p.prunable_pivots) {
        throw Error(ErrorCode::BudgetOutOfRange,
                    "budget " + std::to_string(budget) + " outside [" + std::to_string(k) + ", " +
                        std::to_string(p.prunable) + "]");
    }
}

RetentionResult finish(const TokenMatrix& tokens, const PivotSet& pivots, std::span<const double> agg,
                       const std::vector<bool>& kept, const std::vector<bool>& prunable,
                       const Partition& p) {
    RetentionResult out;
    out.n = tokens.n();
    out.pivots = pivots;
    out.agg_dup.assign(agg.begin(), agg.end());
    for (std::size_t j = 0; j < tokens.n(); ++j) {
        const bool can_prune = prunable.empty() || prunable[j];
        if (!can_prune || p.is_pivot[j] || kept[j]) out.retained.push_back(j);
    }
    for (std::size_t j : p.candidates) {
        if (kept[j]) {
            out.tau = std::max(out.tau, agg[j]);
        } else {
            out.eps_eff = std::min(out.eps_eff, agg[j]);
        }
    }
    return out;
}

}  // namespace

RetentionResult retain(const TokenMatrix& tokens, const PivotSet& pivots, std::span<const double> agg,
                       std::size_t budget, const std::vector<bool>& prunable) {
    const auto p = partition(tokens.n(), pivots, prunable);
    check_budget(budget, pivots.size(), p);
    const auto chosen = select_extreme(agg, p.candidates, budget - p.prunable_pivots, Direction::Min);
    std::vector<bool> kept(tokens.n(), false);
    for (std::size_t j : chosen) kept[j] = true;
    return finish(tokens, pivots, agg, kept, prunable, p);
}

RetentionResult retain_per_pivot(const TokenMatrix& tokens, const PivotSet& pivots,
                                 const DupMatrix& dup, std::span<const double> agg,
                                 std::size_t budget, const std::vector<bool>& prunable) {
    const auto p = partition(tokens.n(), pivots, prunable);
    check_budget(budget, pivots.size(), p);
    const std::size_t k = pivots.size();
    const std::size_t to_prune = p.candidates.size() - (budget - p.prunable_pivots);

    std::vector<std::vector<std::size_t>> queues(k, p.candidates);
    for (std::size_t i = 0; i < k; ++i) {
        const auto r = dup.row(i);
        std::sort(queues[i].begin(), queues[i].end(), [&](std::size_t a, std::size_t b) {
            return r[a] != r[b] ? r[a] > r[b] : a < b;
        });
    }
    std::vector<bool> kept(tokens.n(), false);
    for (std::size_t j : p.candidates) kept[j] = true;
    std::vector<std::size_t> cursor(k, 0);
    for (std::size_t pruned = 0, turn = 0; pruned < to_prune; ++turn) {
        const std::size_t i = turn % k;
        auto& c = cursor[i];
        while (c < queues[i].size() && !kept[queues[i][c]]) ++c;
        if (c == queues[i].size()) continue;
        kept[queues[i][c]] = false;
        ++pruned;
    }
    auto out = finish(tokens, pivots, agg, kept, prunable, p);
    out.selection = Selection::PerPivot;
    return out;
}

RetentionResult dart_prune(const TokenMatrix& tokens, const AuxFeatures& aux,
                           const AttentionMap* attn, const ReductionConfig& cfg) {
    validate(tokens);
    // The token matrix may double as its own key or value matrix.
    AuxFeatures distinct = aux;
    if (distinct.keys == &tokens) distinct.keys = nullptr;
    if (distinct.values == &tokens) distinct.values = nullptr;
    validate_aux(distinct, tokens.n());
    if (cfg.pivot_count > tokens.n()) {
        throw Error(ErrorCode::KExceedsN, "pivot count " + std::to_string(cfg.pivot_count) +
                                              " exceeds " + std::to_string(tokens.n()) + " tokens");
    }
    const auto mask = prunable_mask(tokens, cfg);
    const auto prunable = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    const std::size_t budget = resolve_budget(cfg, prunable);

    const auto pivots = select_pivots(tokens, aux, attn, cfg);
    const auto dup = dup_scores(pivots, tokens);
    const auto agg = aggregate_dup(dup, cfg.aggregator);
    auto out = cfg.selection == Selection::PerPivot
                   ? retain_per_pivot(tokens, pivots, dup, agg, budget, mask)
                   : retain(tokens, pivots, agg, budget, mask);
    out.aggregator = cfg.aggregator;
    return out;
}

}  // namespace dart
