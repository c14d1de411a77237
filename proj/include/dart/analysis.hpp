// Cost accounting and guarantees for a retained token set.
//
// FLOPs follow the dense-transformer count T * (4nd^2 + 2n^2d + 2ndm), with the
// first L layers seeing the full sequence and the rest the pruned one. Counts
// are exact (arbitrary precision); only the ratio is a double.
//
// Bound verification covers three statements about a max-aggregated result
// with realized threshold eps and norm bound B:
//   distance:  every pruned token lies within sqrt(2(1-eps)) B of some pivot
//   hausdorff: d_H(X, R) <= sqrt(2(1-eps)) B
//   output:    ||f(X) - f(R)|| <= K sqrt(2(1-eps)) B for a K-Lipschitz f
// The first step replaces both norms by B, which only holds when the norms
// agree. BoundMode::General checks the per-pair inequality that is exact for
// any norms instead:
//   ||p - x||^2 <= ||p||^2 + ||x||^2 - 2 eps ||p|| ||x||
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dart/core.hpp"
#include "dart/dedup.hpp"

namespace dart {

using BigInt = boost::multiprecision::cpp_int;

// --- FLOPs -----------------------------------------------------------------

/// T * (4 n d^2 + 2 n^2 d + 2 n d m).
BigInt total_flops(const ModelDims& dims, std::uint64_t n);

/// L * (full-length layer cost) + (T - L) * (pruned-length layer cost).
BigInt post_prune_flops(const ModelDims& dims, std::uint64_t n, std::uint64_t n_hat);

struct FlopsRatio {
    double value = 0.0;
    // 1 - post/total reached 1 (nothing left to compute) and was clamped below 1.
    bool clamped = false;
};

/// 1 - post/total, in [0, 1). Zero when total is zero.
FlopsRatio flops_reduction_ratio(const ModelDims& dims, std::uint64_t n, std::uint64_t n_hat);

/// Key plus value elements cached after pruning: 2 * n_hat * d * (T - L).
BigInt kv_cache_elements(const ModelDims& dims, std::uint64_t n_hat);

// --- Set distances ---------------------------------------------------------

/// sup_{x in from} inf_{y in to} ||x - y||.
double directed_hausdorff(const TokenMatrix& from, const TokenMatrix& to);

/// Symmetric Hausdorff distance.
double hausdorff(const TokenMatrix& a, const TokenMatrix& b);

/// d_H(X, X[retained]); with R a subset of X only the X -> R direction counts.
double hausdorff(const TokenMatrix& tokens, std::span<const std::size_t> retained);

// --- Lipschitz set function ------------------------------------------------

/// f(S) = A * (coordinate-wise max over the rows of S).
///
/// Max-pooling moves each coordinate by at most d_H, so
/// ||f(S1) - f(S2)|| <= sqrt(sum_r (sum_c |A_rc|)^2) * d_H(S1, S2).
class LipschitzModel {
public:
    LipschitzModel(std::size_t out_dim, std::size_t in_dim, std::vector<double> weights);

    /// Gaussian weights scaled by 1/sqrt(in_dim), drawn from Rng(seed).
    static LipschitzModel random(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed);

    std::size_t out_dim() const noexcept { return out_dim_; }
    std::size_t in_dim() const noexcept { return in_dim_; }
    double certified_k() const noexcept { return certified_k_; }

    std::vector<double> eval(const TokenMatrix& set) const;
    std::vector<double> eval(const TokenMatrix& tokens, std::span<const std::size_t> subset) const;

private:
    std::vector<double> apply(std::span<const double> pooled) const;

    std::size_t out_dim_;
    std::size_t in_dim_;
    std::vector<double> weights_;
    double certified_k_ = 0.0;
};

// --- Bound verification ----------------------------------------------------

enum class BoundMode { Normalized, General };

struct BoundReport {
    BoundMode mode = BoundMode::General;
    double B = 0.0;
    double eps_eff = 0.0;
    double hausdorff = 0.0;
    // Normalized: sqrt(2(1 - eps)) B. General: the largest per-pair radius.
    double radius = 0.0;
    bool norms_equal = false;
    std::size_t pruned = 0;
    bool lemma1_ok = true;
    bool lemma2_ok = true;
    bool theorem1_ok = true;
    bool theorem1_checked = false;
    double output_gap = 0.0;
    double certified_k = 0.0;
    double worst_margin = 0.0;

    bool all_ok() const noexcept { return lemma1_ok && lemma2_ok && theorem1_ok; }
};

struct VerifyOptions {
    // Fail with NotNormalized instead of reporting when norms differ.
    bool require_equal_norms = false;
};

inline constexpr double kEqualNormTolerance = 1e-4;  // relative to B
inline constexpr double kBoundTolerance = 1e-6;      // relative to B

/// Throws WrongAggregator unless `result` came from max aggregation.
BoundReport verify_bounds(const TokenMatrix& tokens, const RetentionResult& result,
                          const LipschitzModel* model, BoundMode mode, VerifyOptions options = {});

// --- Retention diagnostics -------------------------------------------------

struct OverlapStats {
    double jaccard = 0.0;
    double min_overlap = 0.0;
    std::size_t intersection = 0;
};

OverlapStats overlap_stats(const RetentionResult& a, const RetentionResult& b);
OverlapStats overlap_stats(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct PositionStats {
    double mean_norm_index = 0.5;
    std::optional<double> grid_chi2;
};

/// Mean of index / (n - 1) over retained rows and, when a grid is given, the
/// chi-square of retained visual tokens over a 3x3 spatial bucketing against
/// an area-proportional expectation. Visual tokens fill the grid row-major.
PositionStats position_stats(const RetentionResult& result, std::size_t n,
                             const std::optional<Grid>& grid = std::nullopt,
                             const std::optional<std::vector<Modality>>& modality = std::nullopt);

}  // namespace dart
