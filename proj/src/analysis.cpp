#include "dart/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include "dart/numeric.hpp"
#include "dart/rng.hpp"

namespace dart {

namespace {

void check_dims(const ModelDims& dims) {
    if (dims.layers == 0 || dims.hidden == 0 || dims.intermediate == 0) {
        throw Error(ErrorCode::BadParams, "model dimensions must be positive");
    }
    if (dims.prune_layer > dims.layers) {
        throw Error(ErrorCode::BadParams, "prune layer exceeds layer count");
    }
}

BigInt layer_flops(const ModelDims& dims, std::uint64_t n) {
    const BigInt nn = n;
    const BigInt d = dims.hidden;
    const BigInt m = dims.intermediate;
    return 4 * nn * d * d + 2 * nn * nn * d + 2 * nn * d * m;
}

}  // namespace

BigInt total_flops(const ModelDims& dims, std::uint64_t n) {
    check_dims(dims);
    return BigInt(dims.layers) * layer_flops(dims, n);
}

BigInt post_prune_flops(const ModelDims& dims, std::uint64_t n, std::uint64_t n_hat) {
    check_dims(dims);
    if (n_hat > n) throw Error(ErrorCode::BadParams, "pruned length exceeds the original length");
    return BigInt(dims.prune_layer) * layer_flops(dims, n) +
           BigInt(dims.layers - dims.prune_layer) * layer_flops(dims, n_hat);
}

FlopsRatio flops_reduction_ratio(const ModelDims& dims, std::uint64_t n, std::uint64_t n_hat) {
    const BigInt total = total_flops(dims, n);
    const BigInt post = post_prune_flops(dims, n, n_hat);
    FlopsRatio out;
    if (total == 0 || post == total) return out;
    out.value = 1.0 - post.convert_to<double>() / total.convert_to<double>();
    if (out.value >= 1.0) {
        out.value = std::nextafter(1.0, 0.0);
        out.clamped = true;
    }
    return out;
}

BigInt kv_cache_elements(const ModelDims& dims, std::uint64_t n_hat) {
    check_dims(dims);
    return BigInt(2) * n_hat * dims.hidden * (dims.layers - dims.prune_layer);
}

double directed_hausdorff(const TokenMatrix& from, const TokenMatrix& to) {
    if (from.n() == 0 || to.n() == 0) throw Error(ErrorCode::EmptySet, "Hausdorff distance of an empty set");
    if (from.d() != to.d()) throw Error(ErrorCode::ShapeMismatch, "sets have different dimensions");
    double worst = 0.0;
    for (std::size_t i = 0; i < from.n(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < to.n() && nearest > worst; ++j) {
            nearest = std::min(nearest, numeric::squared_distance(from.row(i), to.row(j)));
        }
        worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
}

double hausdorff(const TokenMatrix& a, const TokenMatrix& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double hausdorff(const TokenMatrix& tokens, std::span<const std::size_t> retained) {
    if (retained.empty()) throw Error(ErrorCode::EmptyRetention, "retained set is empty");
    for (std::size_t r : retained) {
        if (r >= tokens.n()) throw Error(ErrorCode::BadParams, "retained index out of range");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < tokens.n(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t r : retained) {
            nearest = std::min(nearest, numeric::squared_distance(tokens.row(i), tokens.row(r)));
            if (nearest <= worst) break;
        }
        worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
}

LipschitzModel::LipschitzModel(std::size_t out_dim, std::size_t in_dim, std::vector<double> weights)
    : out_dim_(out_dim), in_dim_(in_dim), weights_(std::move(weights)) {
    if (out_dim_ == 0 || in_dim_ == 0 || weights_.size() != out_dim_ * in_dim_) {
        throw Error(ErrorCode::BadParams, "Lipschitz model weights must be out_dim x in_dim");
    }
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < out_dim_; ++r) {
        double row_abs = 0.0;
        for (std::size_t c = 0; c < in_dim_; ++c) {
            const double w = weights_[r * in_dim_ + c];
            if (!std::isfinite(w)) throw Error(ErrorCode::NonFinite, "Lipschitz model weight is not finite");
            row_abs += std::fabs(w);
        }
        sum_sq += row_abs * row_abs;
    }
    certified_k_ = std::sqrt(sum_sq);
}

LipschitzModel LipschitzModel::random(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> w(out_dim * in_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim == 0 ? 1 : in_dim));
    for (double& v : w) v = rng.gaussian() * scale;
    return LipschitzModel(out_dim, in_dim, std::move(w));
}

std::vector<double> LipschitzModel::apply(std::span<const double> pooled) const {
    std::vector<double> out(out_dim_, 0.0);
    for (std::size_t r = 0; r < out_dim_; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < in_dim_; ++c) acc += weights_[r * in_dim_ + c] * pooled[c];
        out[r] = acc;
    }
    return out;
}

std::vector<double> LipschitzModel::eval(const TokenMatrix& set) const {
    std::vector<std::size_t> all(set.n());
    for (std::size_t i = 0; i < set.n(); ++i) all[i] = i;
    return eval(set, all);
}

std::vector<double> LipschitzModel::eval(const TokenMatrix& tokens,
                                         std::span<const std::size_t> subset) const {
    if (subset.empty()) throw Error(ErrorCode::EmptySet, "Lipschitz model needs a nonempty set");
    if (tokens.d() != in_dim_) throw Error(ErrorCode::ShapeMismatch, "token dimension differs from model input");
    std::vector<double> pooled(in_dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t i : subset) {
        const auto r = tokens.row(i);
        for (std::size_t c = 0; c < in_dim_; ++c) pooled[c] = std::max(pooled[c], static_cast<double>(r[c]));
    }
    return apply(pooled);
}

namespace {

double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

BoundReport verify_bounds(const TokenMatrix& tokens, const RetentionResult& result,
                          const LipschitzModel* model, BoundMode mode, VerifyOptions options) {
    if (result.aggregator != Aggregator::Max || result.agg_dup.size() != tokens.n() ||
        result.pivots.indices.empty()) {
        throw Error(ErrorCode::WrongAggregator, "bounds hold only for max-aggregated duplication results");
    }
    if (result.n != tokens.n()) throw Error(ErrorCode::ShapeMismatch, "result was computed for other tokens");

    const std::size_t n = tokens.n();
    std::vector<double> norms(n);
    std::vector<double> sq(n);
    BoundReport rep;
    rep.mode = mode;
    for (std::size_t i = 0; i < n; ++i) {
        sq[i] = numeric::squared_norm(tokens.row(i));
        norms[i] = std::sqrt(sq[i]);
        rep.B = std::max(rep.B, norms[i]);
    }
    rep.norms_equal = std::all_of(norms.begin(), norms.end(), [&](double v) {
        return std::fabs(v - rep.B) <= kEqualNormTolerance * rep.B;
    });
    if (options.require_equal_norms && !rep.norms_equal) {
        throw Error(ErrorCode::NotNormalized, "normalized mode needs every token norm equal to B");
    }

    std::vector<bool> kept(n, false);
    for (std::size_t r : result.retained) kept[r] = true;
    std::vector<std::size_t> pruned;
    for (std::size_t j = 0; j < n; ++j) {
        if (!kept[j]) pruned.push_back(j);
    }
    rep.pruned = pruned.size();
    rep.eps_eff = result.eps_eff;
    rep.hausdorff = hausdorff(tokens, result.retained);
    if (model != nullptr) rep.certified_k = model->certified_k();
    if (pruned.empty()) {
        if (model != nullptr) rep.theorem1_checked = true;
        return rep;
    }

    const double tol = kBoundTolerance * rep.B;
    const double eps = std::min(result.eps_eff, 1.0);
    const auto& pivots = result.pivots.indices;

    double lemma1_margin = std::numeric_limits<double>::infinity();
    if (mode == BoundMode::Normalized) {
        rep.radius = std::sqrt(2.0 * (1.0 - eps)) * rep.B;
        for (std::size_t j : pruned) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t p : pivots) {
                nearest = std::min(nearest, numeric::squared_distance(tokens.row(p), tokens.row(j)));
            }
            lemma1_margin = std::min(lemma1_margin, rep.radius - std::sqrt(nearest));
        }
    } else {
        for (std::size_t j : pruned) {
            // The pivot that makes x_j a duplicate: highest cosine, lowest index on ties.
            std::size_t best = pivots.front();
            double best_cos = -std::numeric_limits<double>::infinity();
            for (std::size_t p : pivots) {
                const double c = numeric::cosine_from_parts(numeric::dot(tokens.row(p), tokens.row(j)),
                                                            sq[p], sq[j]);
                if (c > best_cos) {
                    best_cos = c;
                    best = p;
                }
            }
            const double rhs = norms[best] * norms[best] + norms[j] * norms[j] -
                               2.0 * eps * norms[best] * norms[j];
            const double radius = std::sqrt(std::max(rhs, 0.0));
            const double dist = std::sqrt(numeric::squared_distance(tokens.row(best), tokens.row(j)));
            rep.radius = std::max(rep.radius, radius);
            lemma1_margin = std::min(lemma1_margin, radius - dist);
        }
    }
    const double lemma2_margin = rep.radius - rep.hausdorff;
    rep.lemma1_ok = lemma1_margin >= -tol;
    rep.lemma2_ok = lemma2_margin >= -tol;
    rep.worst_margin = std::min(lemma1_margin, lemma2_margin);

    if (model != nullptr) {
        const auto full = model->eval(tokens);
        const auto kept_out = model->eval(tokens, result.retained);
        rep.output_gap = euclid(full, kept_out);
        const double reach = mode == BoundMode::Normalized ? rep.radius : rep.hausdorff;
        const double margin = rep.certified_k * reach - rep.output_gap;
        rep.theorem1_checked = true;
        rep.theorem1_ok = margin >= -tol * std::max(1.0, rep.certified_k);
        rep.worst_margin = std::min(rep.worst_margin, margin);
    }
    return rep;
}

OverlapStats overlap_stats(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::vector<std::size_t> sa(a.begin(), a.end());
    std::vector<std::size_t> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
    std::sort(sb.begin(), sb.end());
    sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
    std::vector<std::size_t> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    OverlapStats out;
    out.intersection = common.size();
    const std::size_t uni = sa.size() + sb.size() - common.size();
    const std::size_t smaller = std::min(sa.size(), sb.size());
    out.jaccard = uni == 0 ? 1.0 : static_cast<double>(common.size()) / static_cast<double>(uni);
    out.min_overlap = smaller == 0 ? (uni == 0 ? 1.0 : 0.0)
                                   : static_cast<double>(common.size()) / static_cast<double>(smaller);
    return out;
}

OverlapStats overlap_stats(const RetentionResult& a, const RetentionResult& b) {
    if (a.n != b.n) throw Error(ErrorCode::ShapeMismatch, "results cover different token counts");
    return overlap_stats(a.retained, b.retained);
}

PositionStats position_stats(const RetentionResult& result, std::size_t n, const std::optional<Grid>& grid,
                             const std::optional<std::vector<Modality>>& modality) {
    PositionStats out;
    for (std::size_t r : result.retained) {
        if (r >= n) throw Error(ErrorCode::BadParams, "retained index out of range");
    }
    if (n >= 2 && !result.retained.empty()) {
        double sum = 0.0;
        for (std::size_t r : result.retained) sum += static_cast<double>(r) / static_cast<double>(n - 1);
        out.mean_norm_index = sum / static_cast<double>(result.retained.size());
    }
    if (!grid) return out;

    if (modality && modality->size() != n) throw Error(ErrorCode::ShapeMismatch, "modality tags do not cover n");
    // Grid slot of every visual token, in order of appearance.
    std::vector<std::ptrdiff_t> slot(n, -1);
    std::size_t visual = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!modality || (*modality)[i] == Modality::Visual) slot[i] = static_cast<std::ptrdiff_t>(visual++);
    }
    const std::size_t rows = grid->rows;
    const std::size_t cols = grid->cols;
    if (rows * cols != visual || visual == 0) {
        throw Error(ErrorCode::GridMismatch, "grid does not match the visual token count");
    }
    auto bucket = [&](std::size_t s) {
        const std::size_t r = s / cols;
        const std::size_t c = s % cols;
        return (r * 3 / rows) * 3 + (c * 3 / cols);
    };
    double area[9] = {};
    for (std::size_t s = 0; s < visual; ++s) area[bucket(s)] += 1.0;
    double observed[9] = {};
    double kept = 0.0;
    for (std::size_t r : result.retained) {
        if (slot[r] < 0) continue;
        observed[bucket(static_cast<std::size_t>(slot[r]))] += 1.0;
        kept += 1.0;
    }
    double chi2 = 0.0;
    for (int b = 0; b < 9; ++b) {
        const double expected = kept * area[b] / static_cast<double>(visual);
        if (expected > 0.0) chi2 += (observed[b] - expected) * (observed[b] - expected) / expected;
    }
    out.grid_chi2 = chi2;
    return out;
}

}  // namespace dart
