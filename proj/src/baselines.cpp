#include "dart/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dart/pivot.hpp"
#include "dart/rng.hpp"
#include "dart/topk.hpp"

namespace dart {

namespace {

void check_budget(std::size_t budget, std::size_t n) {
    if (budget < 1 || budget > n) {
        throw Error(ErrorCode::BudgetOutOfRange,
                    "budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
    }
}

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

RetentionResult random_prune(std::size_t n, std::size_t budget, std::uint64_t seed) {
    check_budget(budget, n);
    Rng rng(seed);
    RetentionResult out;
    out.n = n;
    out.retained = sample_without_replacement(iota(n), budget, rng);
    std::sort(out.retained.begin(), out.retained.end());
    out.pivots.strategy.kind = PivotKind::Random;
    return out;
}

RetentionResult importance_prune(std::span<const double> scores, std::size_t budget) {
    const std::size_t n = scores.size();
    check_budget(budget, n);
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error(ErrorCode::NonFinite, "importance scores must be finite");
    }
    RetentionResult out;
    out.n = n;
    const auto all = iota(n);
    out.retained = select_extreme(scores, all, budget, Direction::Max);
    out.agg_dup.assign(scores.begin(), scores.end());
    out.pivots.strategy.kind = PivotKind::AttnScore;
    out.tau = std::numeric_limits<double>::infinity();
    for (std::size_t i : out.retained) out.tau = std::min(out.tau, scores[i]);
    std::vector<bool> kept(n, false);
    for (std::size_t i : out.retained) kept[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (!kept[i]) out.eps_eff = std::min(out.eps_eff, scores[i]);
    }
    return out;
}

namespace {

// Column means of the map restricted to subset x subset with rows renormalized.
// Rows with no mass inside the subset are skipped.
std::vector<double> restricted_received(const AttentionMap& attn, std::span<const std::size_t> subset) {
    const std::size_t m = subset.size();
    std::vector<double> received(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        const auto r = attn.row(subset[a]);
        double mass = 0.0;
        for (std::size_t b = 0; b < m; ++b) mass += r[subset[b]];
        if (mass <= 0.0) continue;
        for (std::size_t b = 0; b < m; ++b) received[b] += r[subset[b]] / mass;
    }
    for (double& v : received) v /= static_cast<double>(m);
    return received;
}

std::vector<double> reference_scores(const AttentionMap& attn) {
    validate(attn);
    return restricted_received(attn, iota(attn.n()));
}

}  // namespace

std::vector<double> renormalized_received(const AttentionMap& attn) { return reference_scores(attn); }

double subset_drift(const AttentionMap& attn, std::span<const std::size_t> subset,
                    std::span<const double> full_scores) {
    const auto received = restricted_received(attn, subset);
    double drift = 0.0;
    for (std::size_t b = 0; b < subset.size(); ++b) drift += received[b] - full_scores[subset[b]];
    return drift;
}

BiasEstimate recalibration_bias(const AttentionMap& attn, std::size_t budget, std::size_t samples,
                                std::uint64_t seed) {
    const auto full = reference_scores(attn);
    check_budget(budget, attn.n());
    if (samples == 0) throw Error(ErrorCode::BadParams, "need at least one sample");
    const auto all = iota(attn.n());
    // Welford keeps the variance stable when drifts are nearly constant.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng(derive_seed(seed, s));
        auto subset = sample_without_replacement(all, budget, rng);
        std::sort(subset.begin(), subset.end());
        const double x = subset_drift(attn, subset, full);
        const double delta = x - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (x - mean);
    }
    BiasEstimate out;
    out.mean = mean;
    out.samples = samples;
    if (samples > 1) {
        const double var = m2 / static_cast<double>(samples - 1);
        out.std_error = std::sqrt(var / static_cast<double>(samples));
    }
    return out;
}

BiasEstimate recalibration_bias_exhaustive(const AttentionMap& attn, std::size_t budget) {
    const auto full = reference_scores(attn);
    const std::size_t n = attn.n();
    check_budget(budget, n);
    if (n > 20) throw Error(ErrorCode::TooLarge, "exhaustive enumeration is limited to n <= 20");
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<std::size_t> subset;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        if (static_cast<std::size_t>(std::popcount(bits)) != budget) continue;
        subset.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (bits & (1u << i)) subset.push_back(i);
        }
        sum += subset_drift(attn, subset, full);
        ++count;
    }
    BiasEstimate out;
    out.mean = sum / static_cast<double>(count);
    out.samples = count;
    return out;
}

}  // namespace dart
