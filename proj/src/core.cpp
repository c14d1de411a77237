#include "dart/core.hpp"

#include "dart/numeric.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

namespace dart {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::MissingAux: return "MissingAux";
        case ErrorCode::MissingAttention: return "MissingAttention";
        case ErrorCode::QuotaExceedsModality: return "QuotaExceedsModality";
        case ErrorCode::KExceedsN: return "KExceedsN";
        case ErrorCode::BudgetOutOfRange: return "BudgetOutOfRange";
        case ErrorCode::NotRowStochastic: return "NotRowStochastic";
        case ErrorCode::EmptyRetention: return "EmptyRetention";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::NotNormalized: return "NotNormalized";
        case ErrorCode::WrongAggregator: return "WrongAggregator";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Format: return "Format";
    }
    return "Unknown";
}

TokenMatrix::TokenMatrix(std::size_t n, std::size_t d, std::vector<float> data,
                         std::optional<std::vector<Modality>> modality, std::optional<Grid> grid)
    : n_(n), d_(d), data_(std::move(data)), modality_(std::move(modality)), grid_(grid) {
    if (data_.size() != n_ * d_) {
        throw Error(ErrorCode::ShapeMismatch, "token data holds " + std::to_string(data_.size()) +
                                                  " floats, expected " + std::to_string(n_ * d_));
    }
    if (modality_ && modality_->size() != n_) {
        throw Error(ErrorCode::ShapeMismatch, "modality tags do not cover every token");
    }
}

std::size_t TokenMatrix::visual_count() const noexcept {
    if (!modality_) return n_;
    std::size_t count = 0;
    for (Modality m : *modality_) count += (m == Modality::Visual);
    return count;
}

TokenMatrix TokenMatrix::subset(std::span<const std::size_t> indices) const {
    std::vector<float> out;
    out.reserve(indices.size() * d_);
    std::optional<std::vector<Modality>> tags;
    if (modality_) tags.emplace();
    for (std::size_t i : indices) {
        auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
        if (tags) tags->push_back((*modality_)[i]);
    }
    return TokenMatrix(indices.size(), d_, std::move(out), std::move(tags));
}

AttentionMap::AttentionMap(std::size_t n, std::vector<float> weights)
    : n_(n), weights_(std::move(weights)) {
    if (weights_.size() != n_ * n_) {
        throw Error(ErrorCode::ShapeMismatch, "attention map must be n x n");
    }
}

DART_MULTIVERSION
const TokenMatrix& validate(const TokenMatrix& tokens) {
    if (tokens.n() == 0 || tokens.d() == 0) {
        throw Error(ErrorCode::EmptyMatrix, "token matrix is empty");
    }
    // Exponent bits all set means Inf or NaN; branch-free so the scan vectorizes.
    for (std::size_t i = 0; i < tokens.n(); ++i) {
        std::uint32_t bad = 0;
        for (float f : tokens.row(i)) {
            bad |= static_cast<std::uint32_t>((std::bit_cast<std::uint32_t>(f) & 0x7f800000u) == 0x7f800000u);
        }
        if (bad != 0) throw Error(ErrorCode::NonFinite, "non-finite entry at row " + std::to_string(i));
    }
    if (tokens.grid()) {
        const auto& g = *tokens.grid();
        if (static_cast<std::size_t>(g.rows) * g.cols != tokens.visual_count()) {
            throw Error(ErrorCode::GridMismatch,
                        "grid " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                            " does not match " + std::to_string(tokens.visual_count()) +
                            " visual tokens");
        }
    }
    return tokens;
}

void validate(const AttentionMap& attn) {
    if (attn.n() == 0) throw Error(ErrorCode::EmptyMatrix, "attention map is empty");
    for (std::size_t i = 0; i < attn.n(); ++i) {
        double sum = 0.0;
        for (float w : attn.row(i)) {
            if (!std::isfinite(w) || w < 0.0f) {
                throw Error(ErrorCode::NotRowStochastic,
                            "row " + std::to_string(i) + " has a negative or non-finite weight");
            }
            sum += w;
        }
        if (std::fabs(sum - 1.0) > kRowStochasticTolerance) {
            throw Error(ErrorCode::NotRowStochastic,
                        "row " + std::to_string(i) + " sums to " + std::to_string(sum));
        }
    }
}

void validate_aux(const AuxFeatures& aux, std::size_t n) {
    for (const TokenMatrix* m : {aux.keys, aux.values}) {
        if (m == nullptr) continue;
        validate(*m);
        if (m->n() != n) {
            throw Error(ErrorCode::ShapeMismatch, "auxiliary matrix row count differs from tokens");
        }
    }
}

std::vector<bool> prunable_mask(const TokenMatrix& tokens, const ReductionConfig& cfg) {
    std::vector<bool> mask(tokens.n(), true);
    if (tokens.has_modality() && cfg.prune_visual_only) {
        for (std::size_t i = 0; i < tokens.n(); ++i) {
            mask[i] = tokens.modality_of(i) == Modality::Visual;
        }
    }
    return mask;
}

std::size_t resolve_budget(const ReductionConfig& cfg, std::size_t prunable) {
    const std::size_t k = cfg.pivot_count;
    if (k == 0) throw Error(ErrorCode::BadParams, "pivot count must be at least 1");
    if (cfg.budget) {
        const std::size_t b = *cfg.budget;
        if (b < k || b > prunable) {
            throw Error(ErrorCode::BudgetOutOfRange,
                        "budget " + std::to_string(b) + " outside [" + std::to_string(k) + ", " +
                            std::to_string(prunable) + "]");
        }
        return b;
    }
    if (!cfg.ratio) throw Error(ErrorCode::BadParams, "either budget or ratio is required");
    const double ratio = *cfg.ratio;
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw Error(ErrorCode::BadParams, "ratio must lie in (0, 1]");
    }
    if (k > prunable) {
        throw Error(ErrorCode::BudgetOutOfRange, "pivot count exceeds the prunable token count");
    }
    const long long raw = std::llround(static_cast<double>(prunable) * (1.0 - ratio));
    const std::size_t b = raw < 0 ? 0 : static_cast<std::size_t>(raw);
    if (b < k) return k;
    if (b > prunable) return prunable;
    return b;
}

}  // namespace dart
