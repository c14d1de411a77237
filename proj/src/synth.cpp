#include "dart/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dart/rng.hpp"

namespace dart::synth {

namespace {

std::vector<double> gaussian_vector(std::size_t d, Rng& rng) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.gaussian();
    return v;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void normalize_in_place(std::vector<double>& v) {
    const double nv = norm(v);
    if (nv < 1e-12) return;
    for (double& x : v) x /= nv;
}

}  // namespace

ClusteredTokens gen_clustered(const ClusteredParams& p) {
    if (p.n == 0 || p.d == 0 || p.clusters == 0 || p.clusters > p.n || !(p.spread >= 0.0) ||
        !std::isfinite(p.spread)) {
        throw Error(ErrorCode::BadParams, "clustered generator needs 1 <= clusters <= n, d >= 1, spread >= 0");
    }
    Rng rng(p.seed);
    std::vector<std::vector<double>> centers(p.clusters);
    for (auto& c : centers) {
        do {
            c = gaussian_vector(p.d, rng);
        } while (norm(c) < 1e-12);
        normalize_in_place(c);
    }
    ClusteredTokens out;
    out.labels.resize(p.n);
    std::vector<float> data;
    data.reserve(p.n * p.d);
    for (std::size_t t = 0; t < p.n; ++t) {
        const std::size_t label = t % p.clusters;
        out.labels[t] = label;
        std::vector<double> x = centers[label];
        if (p.spread > 0.0) {
            for (double& v : x) v += p.spread * rng.gaussian();
            if (p.normalize) normalize_in_place(x);
        }
        for (double v : x) data.push_back(static_cast<float>(v));
    }
    out.tokens = TokenMatrix(p.n, p.d, std::move(data));
    return out;
}

TokenMatrix gen_oversmoothed(const OversmoothedParams& p) {
    if (p.n == 0 || p.d == 0 || !(p.mixing >= 0.0 && p.mixing <= 1.0)) {
        throw Error(ErrorCode::BadParams, "oversmoothed generator needs n, d >= 1 and mixing in [0, 1]");
    }
    Rng rng(p.seed);
    std::vector<std::vector<double>> rows(p.n);
    for (auto& r : rows) r = gaussian_vector(p.d, rng);
    for (std::size_t step = 0; step < p.steps; ++step) {
        std::vector<double> mean(p.d, 0.0);
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < p.d; ++c) mean[c] += r[c];
        }
        for (double& m : mean) m /= static_cast<double>(p.n);
        for (auto& r : rows) {
            for (std::size_t c = 0; c < p.d; ++c) r[c] = (1.0 - p.mixing) * r[c] + p.mixing * mean[c];
        }
    }
    std::vector<float> data;
    data.reserve(p.n * p.d);
    for (auto& r : rows) {
        if (p.normalize) normalize_in_place(r);
        for (double v : r) data.push_back(static_cast<float>(v));
    }
    return TokenMatrix(p.n, p.d, std::move(data));
}

TokenMatrix unequal_norm_counterexample() {
    // The two unit-direction fillers are shrunk slightly so the pivot at row 0
    // is the strict largest norm.
    constexpr double shrink = 0.999;
    const auto c = static_cast<float>(0.9 * shrink);
    const auto s = static_cast<float>(std::sqrt(1.0 - 0.9 * 0.9) * shrink);
    const auto z = static_cast<float>(shrink);
    return TokenMatrix(4, 2, {1.0f, 0.0f, 0.01f, 0.0f, c, s, 0.0f, z});
}

ReductionConfig counterexample_config() {
    ReductionConfig cfg;
    cfg.budget = 2;
    cfg.pivot_count = 1;
    cfg.strategy = {PivotKind::EmbedNorm, Direction::Max, NormOrder::L2};
    cfg.aggregator = Aggregator::Max;
    return cfg;
}

// ---------------------------------------------------------------------------
// Reference pruner. Deliberately shares no code with pivot.cpp / dedup.cpp
// beyond the random stream; the lane order of every sum is spelled out again.

namespace {

constexpr std::size_t kLanes = 8;

double lane_sum(const std::vector<double>& terms) {
    double lane[kLanes] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t j = 0; j < terms.size(); ++j) lane[j % kLanes] += terms[j];
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
}

double ref_dot(const TokenMatrix& m, std::size_t a, std::size_t b) {
    std::vector<double> terms(m.d());
    for (std::size_t j = 0; j < m.d(); ++j) {
        terms[j] = static_cast<double>(m.row(a)[j]) * static_cast<double>(m.row(b)[j]);
    }
    return lane_sum(terms);
}

double ref_norm(const TokenMatrix& m, std::size_t i, NormOrder order) {
    std::vector<double> terms(m.d());
    for (std::size_t j = 0; j < m.d(); ++j) {
        const double v = static_cast<double>(m.row(i)[j]);
        terms[j] = order == NormOrder::L1 ? std::fabs(v) : v * v;
    }
    const double s = lane_sum(terms);
    return order == NormOrder::L1 ? s : std::sqrt(s);
}

double ref_dup(const TokenMatrix& m, std::size_t p, std::size_t x) {
    const double np = std::sqrt(ref_dot(m, p, p));
    const double nx = std::sqrt(ref_dot(m, x, x));
    if (np < 1e-12 || nx < 1e-12) return 0.0;
    return ref_dot(m, p, x) / (np * nx);
}

std::vector<double> ref_scores(const TokenMatrix& tokens, const AuxFeatures& aux, const AttentionMap* attn,
                               const PivotStrategy& s) {
    const std::size_t n = tokens.n();
    std::vector<double> scores(n, 0.0);
    switch (s.kind) {
        case PivotKind::Random:
            break;
        case PivotKind::EmbedNorm:
            for (std::size_t i = 0; i < n; ++i) scores[i] = ref_norm(tokens, i, s.norm_order);
            break;
        case PivotKind::KNorm:
        case PivotKind::VNorm: {
            const TokenMatrix* m = s.kind == PivotKind::KNorm ? aux.keys : aux.values;
            if (!m) throw Error(ErrorCode::MissingAux, "missing auxiliary matrix");
            for (std::size_t i = 0; i < n; ++i) scores[i] = ref_norm(*m, i, NormOrder::L1);
            break;
        }
        case PivotKind::AttnScore:
            if (attn == nullptr) throw Error(ErrorCode::MissingAttention, "missing attention map");
            validate(*attn);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) scores[i] += attn->at(j, i);
            }
            for (double& v : scores) v /= static_cast<double>(n);
            break;
    }
    return scores;
}

std::vector<std::size_t> ref_pivots(const TokenMatrix& tokens, const AuxFeatures& aux, const AttentionMap* attn,
                                    const ReductionConfig& cfg) {
    const std::size_t n = tokens.n();
    const std::size_t k = cfg.pivot_count;
    if (k == 0) throw Error(ErrorCode::BadParams, "pivot count must be at least 1");
    if (k > n) throw Error(ErrorCode::KExceedsN, "pivot count exceeds token count");
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> quotas;
    if (cfg.modality_quota) {
        if (cfg.modality_quota->visual + cfg.modality_quota->text != k) {
            throw Error(ErrorCode::BadParams, "quota must sum to k");
        }
        groups.resize(2);
        for (std::size_t i = 0; i < n; ++i) {
            groups[tokens.modality_of(i) == Modality::Visual ? 0 : 1].push_back(i);
        }
        quotas = {cfg.modality_quota->visual, cfg.modality_quota->text};
        for (std::size_t g = 0; g < 2; ++g) {
            if (quotas[g] > groups[g].size()) throw Error(ErrorCode::QuotaExceedsModality, "quota too large");
        }
    } else {
        groups.emplace_back();
        for (std::size_t i = 0; i < n; ++i) groups[0].push_back(i);
        quotas = {k};
    }

    std::vector<std::size_t> chosen;
    if (cfg.strategy.kind == PivotKind::Random) {
        Rng rng(cfg.seed);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            auto pool = groups[g];
            for (std::size_t t = 0; t < quotas[g]; ++t) {
                const std::size_t pick = t + static_cast<std::size_t>(rng.below(pool.size() - t));
                std::swap(pool[t], pool[pick]);
                chosen.push_back(pool[t]);
            }
        }
    } else {
        const auto scores = ref_scores(tokens, aux, attn, cfg.strategy);
        const bool want_max = cfg.strategy.direction == Direction::Max;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            auto order = groups[g];  // ascending index, so a stable sort keeps lower indices first
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return want_max ? scores[a] > scores[b] : scores[a] < scores[b];
            });
            chosen.insert(chosen.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(quotas[g]));
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

RetentionResult brute_force_prune(const TokenMatrix& tokens, const AuxFeatures& aux, const AttentionMap* attn,
                                  const ReductionConfig& cfg) {
    validate(tokens);
    const std::size_t n = tokens.n();
    if (n > kBruteForceLimit) {
        throw Error(ErrorCode::TooLarge, "reference pruner is limited to " + std::to_string(kBruteForceLimit) +
                                             " tokens");
    }
    if (cfg.pivot_count > n) throw Error(ErrorCode::KExceedsN, "pivot count exceeds token count");

    std::vector<bool> can_prune(n);
    std::size_t prunable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        can_prune[i] = !(tokens.has_modality() && cfg.prune_visual_only &&
                         tokens.modality_of(i) == Modality::Text);
        prunable += can_prune[i];
    }
    const std::size_t budget = resolve_budget(cfg, prunable);
    const auto pivots = ref_pivots(tokens, aux, attn, cfg);
    const std::size_t k = pivots.size();

    std::vector<std::vector<double>> dup(k, std::vector<double>(n));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) dup[i][j] = ref_dup(tokens, pivots[i], j);
    }
    std::vector<double> agg(n);
    for (std::size_t j = 0; j < n; ++j) {
        double v = dup[0][j];
        for (std::size_t i = 1; i < k; ++i) {
            if (cfg.aggregator == Aggregator::Max && dup[i][j] > v) v = dup[i][j];
            if (cfg.aggregator == Aggregator::Min && dup[i][j] < v) v = dup[i][j];
            if (cfg.aggregator == Aggregator::Mean) v = v + dup[i][j];
        }
        agg[j] = cfg.aggregator == Aggregator::Mean ? v / static_cast<double>(k) : v;
    }

    std::vector<bool> is_pivot(n, false);
    for (std::size_t p : pivots) is_pivot[p] = true;
    std::size_t prunable_pivots = 0;
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < n; ++j) {
        if (!can_prune[j]) continue;
        if (is_pivot[j]) {
            ++prunable_pivots;
        } else {
            candidates.push_back(j);
        }
    }
    const std::size_t keep = budget - prunable_pivots;
    std::vector<bool> kept(n, false);

    if (cfg.selection == Selection::Global) {
        auto order = candidates;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return agg[a] < agg[b]; });
        for (std::size_t t = 0; t < keep; ++t) kept[order[t]] = true;
    } else {
        for (std::size_t j : candidates) kept[j] = true;
        std::size_t remaining = candidates.size();
        for (std::size_t turn = 0; remaining > keep; ++turn) {
            const std::size_t i = turn % k;
            std::size_t victim = n;
            for (std::size_t j : candidates) {
                if (kept[j] && (victim == n || dup[i][j] > dup[i][victim])) victim = j;
            }
            kept[victim] = false;
            --remaining;
        }
    }

    RetentionResult out;
    out.n = n;
    out.pivots.indices = pivots;
    out.pivots.strategy = cfg.strategy;
    if (cfg.strategy.kind != PivotKind::Random) {
        const auto scores = ref_scores(tokens, aux, attn, cfg.strategy);
        std::vector<double> picked;
        for (std::size_t p : pivots) picked.push_back(scores[p]);
        out.pivots.scores = picked;
    }
    out.agg_dup = agg;
    out.aggregator = cfg.aggregator;
    out.selection = cfg.selection;
    for (std::size_t j = 0; j < n; ++j) {
        if (!can_prune[j] || is_pivot[j] || kept[j]) out.retained.push_back(j);
    }
    for (std::size_t j : candidates) {
        if (kept[j] && agg[j] > out.tau) out.tau = agg[j];
        if (!kept[j] && agg[j] < out.eps_eff) out.eps_eff = agg[j];
    }
    return out;
}

}  // namespace dart::synth
