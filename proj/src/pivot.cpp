#include "dart/pivot.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dart/numeric.hpp"
#include "dart/rng.hpp"
#include "dart/topk.hpp"

namespace dart {

DART_MULTIVERSION
std::vector<double> row_norms(const TokenMatrix& matrix, NormOrder order) {
    std::vector<double> out(matrix.n());
    for (std::size_t i = 0; i < matrix.n(); ++i) {
        const auto r = matrix.row(i);
        out[i] = order == NormOrder::L1 ? numeric::abs_sum(r) : std::sqrt(numeric::squared_norm(r));
    }
    return out;
}

std::vector<double> attention_received(const AttentionMap& attn) {
    validate(attn);
    const std::size_t n = attn.n();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto r = attn.row(j);
        for (std::size_t i = 0; i < n; ++i) out[i] += r[i];
    }
    for (double& s : out) s /= static_cast<double>(n);
    return out;
}

std::vector<double> pivot_scores(const TokenMatrix& tokens, const AuxFeatures& aux,
                                 const AttentionMap* attn, const PivotStrategy& strategy) {
    switch (strategy.kind) {
        case PivotKind::Random:
            return std::vector<double>(tokens.n(), 0.0);
        case PivotKind::EmbedNorm:
            return row_norms(tokens, strategy.norm_order);
        case PivotKind::KNorm:
        case PivotKind::VNorm: {
            const TokenMatrix* m = strategy.kind == PivotKind::KNorm ? aux.keys : aux.values;
            if (!m) {
                throw Error(ErrorCode::MissingAux, strategy.kind == PivotKind::KNorm
                                                       ? "K-norm pivots need a key matrix"
                                                       : "V-norm pivots need a value matrix");
            }
            if (m->n() != tokens.n()) {
                throw Error(ErrorCode::ShapeMismatch, "auxiliary matrix row count differs from tokens");
            }
            return row_norms(*m, NormOrder::L1);
        }
        case PivotKind::AttnScore:
            if (attn == nullptr) {
                throw Error(ErrorCode::MissingAttention, "attention-score pivots need an attention map");
            }
            if (attn->n() != tokens.n()) {
                throw Error(ErrorCode::ShapeMismatch, "attention map size differs from token count");
            }
            return attention_received(*attn);
    }
    return {};
}

PivotSet select_pivots(const TokenMatrix& tokens, const AuxFeatures& aux,
                       const AttentionMap* attn, const ReductionConfig& cfg) {
    const std::size_t n = tokens.n();
    const std::size_t k = cfg.pivot_count;
    if (k == 0) throw Error(ErrorCode::BadParams, "pivot count must be at least 1");
    if (k > n) {
        throw Error(ErrorCode::KExceedsN,
                    "pivot count " + std::to_string(k) + " exceeds " + std::to_string(n) + " tokens");
    }

    struct Partition {
        std::vector<std::size_t> members;
        std::size_t quota;
    };
    std::vector<Partition> parts;
    if (cfg.modality_quota) {
        const auto& q = *cfg.modality_quota;
        if (q.visual + q.text != k) {
            throw Error(ErrorCode::BadParams, "modality quota must sum to the pivot count");
        }
        Partition visual{{}, q.visual};
        Partition text{{}, q.text};
        for (std::size_t i = 0; i < n; ++i) {
            (tokens.modality_of(i) == Modality::Visual ? visual : text).members.push_back(i);
        }
        for (const auto* p : {&visual, &text}) {
            if (p->quota > p->members.size()) {
                throw Error(ErrorCode::QuotaExceedsModality,
                            "quota " + std::to_string(p->quota) + " exceeds " +
                                std::to_string(p->members.size()) + " tokens of that modality");
            }
        }
        parts.push_back(std::move(visual));
        parts.push_back(std::move(text));
    } else {
        Partition all{std::vector<std::size_t>(n), k};
        for (std::size_t i = 0; i < n; ++i) all.members[i] = i;
        parts.push_back(std::move(all));
    }

    PivotSet out;
    out.strategy = cfg.strategy;
    if (cfg.strategy.kind == PivotKind::Random) {
        Rng rng(cfg.seed);
        for (auto& p : parts) {
            auto drawn = sample_without_replacement(std::move(p.members), p.quota, rng);
            out.indices.insert(out.indices.end(), drawn.begin(), drawn.end());
        }
        std::sort(out.indices.begin(), out.indices.end());
        return out;
    }

    const auto scores = pivot_scores(tokens, aux, attn, cfg.strategy);
    for (const auto& p : parts) {
        auto chosen = select_extreme(scores, p.members, p.quota, cfg.strategy.direction);
        out.indices.insert(out.indices.end(), chosen.begin(), chosen.end());
    }
    std::sort(out.indices.begin(), out.indices.end());
    std::vector<double> picked;
    picked.reserve(out.indices.size());
    for (std::size_t i : out.indices) picked.push_back(scores[i]);
    out.scores = std::move(picked);
    return out;
}

}  // namespace dart
