#include "dart/dart.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "dart/analysis.hpp"
#include "dart/baselines.hpp"
#include "dart/dedup.hpp"
#include "dart/io.hpp"
#include "dart/pivot.hpp"
#include "dart/synth.hpp"

struct dart_tokens {
    dart::TokenMatrix value;
};

struct dart_attention {
    dart::AttentionMap value;
};

struct dart_result {
    dart::RetentionResult value;
};

struct dart_lipschitz {
    dart::LipschitzModel value;
};

namespace {

thread_local std::string g_last_error;

dart_status to_status(dart::ErrorCode code) {
    using dart::ErrorCode;
    switch (code) {
        case ErrorCode::EmptyMatrix: return DART_ERR_EMPTY_MATRIX;
        case ErrorCode::NonFinite: return DART_ERR_NON_FINITE;
        case ErrorCode::GridMismatch: return DART_ERR_GRID_MISMATCH;
        case ErrorCode::ShapeMismatch: return DART_ERR_SHAPE_MISMATCH;
        case ErrorCode::MissingAux: return DART_ERR_MISSING_AUX;
        case ErrorCode::MissingAttention: return DART_ERR_MISSING_ATTENTION;
        case ErrorCode::QuotaExceedsModality: return DART_ERR_QUOTA_EXCEEDS_MODALITY;
        case ErrorCode::KExceedsN: return DART_ERR_K_EXCEEDS_N;
        case ErrorCode::BudgetOutOfRange: return DART_ERR_BUDGET_OUT_OF_RANGE;
        case ErrorCode::NotRowStochastic: return DART_ERR_NOT_ROW_STOCHASTIC;
        case ErrorCode::EmptyRetention: return DART_ERR_EMPTY_RETENTION;
        case ErrorCode::EmptySet: return DART_ERR_EMPTY_SET;
        case ErrorCode::NotNormalized: return DART_ERR_NOT_NORMALIZED;
        case ErrorCode::WrongAggregator: return DART_ERR_WRONG_AGGREGATOR;
        case ErrorCode::BadParams: return DART_ERR_BAD_PARAMS;
        case ErrorCode::TooLarge: return DART_ERR_TOO_LARGE;
        case ErrorCode::Io: return DART_ERR_IO;
        case ErrorCode::Format: return DART_ERR_FORMAT;
    }
    return DART_ERR_INTERNAL;
}

dart_status fail(dart_status status, const char* message) {
    g_last_error = message;
    return status;
}

template <typename F>
dart_status guarded(F&& body) {
    try {
        body();
        return DART_OK;
    } catch (const dart::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(DART_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DART_ERR_INTERNAL, e.what());
    }
}

#define DART_REQUIRE(cond)                                                        \
    do {                                                                          \
        if (!(cond)) return fail(DART_ERR_INVALID_ARGUMENT, "null or invalid argument: " #cond); \
    } while (0)

dart::ReductionConfig to_config(const dart_config& c) {
    dart::ReductionConfig cfg;
    if (c.budget != 0) {
        cfg.budget = c.budget;
    } else {
        cfg.ratio = c.ratio;
    }
    cfg.pivot_count = c.pivot_count;
    cfg.strategy.kind = static_cast<dart::PivotKind>(c.pivot_kind);
    cfg.strategy.direction = c.direction == DART_MIN ? dart::Direction::Min : dart::Direction::Max;
    cfg.strategy.norm_order = c.norm_order == DART_L2 ? dart::NormOrder::L2 : dart::NormOrder::L1;
    cfg.aggregator = static_cast<dart::Aggregator>(c.aggregator);
    cfg.selection = c.selection == DART_SELECT_PER_PIVOT ? dart::Selection::PerPivot : dart::Selection::Global;
    cfg.seed = c.seed;
    if (c.has_quota) cfg.modality_quota = dart::ModalityQuota{c.quota_visual, c.quota_text};
    cfg.prune_visual_only = c.prune_visual_only != 0;
    return cfg;
}

dart_config from_config(const dart::ReductionConfig& cfg) {
    dart_config c;
    dart_config_default(&c);
    c.budget = cfg.budget.value_or(0);
    c.ratio = cfg.ratio.value_or(0.0);
    c.pivot_count = cfg.pivot_count;
    c.pivot_kind = static_cast<dart_pivot_kind>(cfg.strategy.kind);
    c.direction = cfg.strategy.direction == dart::Direction::Min ? DART_MIN : DART_MAX;
    c.norm_order = cfg.strategy.norm_order == dart::NormOrder::L2 ? DART_L2 : DART_L1;
    c.aggregator = static_cast<dart_aggregator>(cfg.aggregator);
    c.selection = cfg.selection == dart::Selection::PerPivot ? DART_SELECT_PER_PIVOT : DART_SELECT_GLOBAL;
    c.seed = cfg.seed;
    c.prune_visual_only = cfg.prune_visual_only ? 1 : 0;
    return c;
}

bool valid_enums(const dart_config& c) {
    return c.pivot_kind >= DART_PIVOT_RANDOM && c.pivot_kind <= DART_PIVOT_ATTN_SCORE &&
           c.aggregator >= DART_AGG_MAX && c.aggregator <= DART_AGG_MEAN;
}

dart::AuxFeatures to_aux(const dart_tokens* keys, const dart_tokens* values) {
    dart::AuxFeatures aux;
    if (keys != nullptr) aux.keys = &keys->value;
    if (values != nullptr) aux.values = &values->value;
    return aux;
}

void copy_decimal(const dart::BigInt& v, char (&out)[64]) {
    const std::string s = v.str();
    if (s.size() >= sizeof(out)) throw dart::Error(dart::ErrorCode::BadParams, "FLOP count too large to format");
    std::memcpy(out, s.c_str(), s.size() + 1);
}

}  // namespace

extern "C" {

const char* dart_status_name(dart_status status) {
    switch (status) {
        case DART_OK: return "Ok";
        case DART_ERR_INVALID_ARGUMENT: return "InvalidArgument";
        case DART_ERR_INTERNAL: return "Internal";
        default: break;
    }
    static constexpr dart::ErrorCode codes[] = {
        dart::ErrorCode::EmptyMatrix,      dart::ErrorCode::NonFinite,        dart::ErrorCode::GridMismatch,
        dart::ErrorCode::ShapeMismatch,    dart::ErrorCode::MissingAux,       dart::ErrorCode::MissingAttention,
        dart::ErrorCode::QuotaExceedsModality, dart::ErrorCode::KExceedsN,    dart::ErrorCode::BudgetOutOfRange,
        dart::ErrorCode::NotRowStochastic, dart::ErrorCode::EmptyRetention,   dart::ErrorCode::EmptySet,
        dart::ErrorCode::NotNormalized,    dart::ErrorCode::WrongAggregator,  dart::ErrorCode::BadParams,
        dart::ErrorCode::TooLarge,         dart::ErrorCode::Io,               dart::ErrorCode::Format,
    };
    const int idx = static_cast<int>(status) - 1;
    if (idx >= 0 && idx < static_cast<int>(std::size(codes))) return dart::error_code_name(codes[idx]);
    return "Unknown";
}

const char* dart_last_error(void) { return g_last_error.c_str(); }

const char* dart_version(void) { return DART_VERSION; }

dart_status dart_tokens_create(size_t n, size_t d, const float* data, const uint8_t* modality, int has_grid,
                               uint32_t grid_rows, uint32_t grid_cols, dart_tokens** out) {
    DART_REQUIRE(out != nullptr);
    DART_REQUIRE(data != nullptr || n * d == 0);
    return guarded([&] {
        std::optional<std::vector<dart::Modality>> tags;
        if (modality != nullptr) {
            tags.emplace(n);
            for (size_t i = 0; i < n; ++i) {
                if (modality[i] > 1) throw dart::Error(dart::ErrorCode::BadParams, "modality must be 0 or 1");
                (*tags)[i] = static_cast<dart::Modality>(modality[i]);
            }
        }
        std::optional<dart::Grid> grid;
        if (has_grid) grid = dart::Grid{grid_rows, grid_cols};
        dart::TokenMatrix m(n, d, std::vector<float>(data, data + n * d), std::move(tags), grid);
        dart::validate(m);
        *out = new dart_tokens{std::move(m)};
    });
}

dart_status dart_tokens_load(const char* path, dart_tokens** out) {
    DART_REQUIRE(path != nullptr && out != nullptr);
    return guarded([&] { *out = new dart_tokens{dart::io::read_tokens(path)}; });
}

dart_status dart_tokens_save(const dart_tokens* tokens, const char* path) {
    DART_REQUIRE(tokens != nullptr && path != nullptr);
    return guarded([&] { dart::io::write_tokens(path, tokens->value); });
}

void dart_tokens_free(dart_tokens* tokens) { delete tokens; }
size_t dart_tokens_n(const dart_tokens* tokens) { return tokens ? tokens->value.n() : 0; }
size_t dart_tokens_d(const dart_tokens* tokens) { return tokens ? tokens->value.d() : 0; }
const float* dart_tokens_data(const dart_tokens* tokens) { return tokens ? tokens->value.data().data() : nullptr; }
int dart_tokens_has_modality(const dart_tokens* tokens) { return tokens && tokens->value.has_modality(); }

int dart_tokens_grid(const dart_tokens* tokens, uint32_t* rows, uint32_t* cols) {
    if (tokens == nullptr || !tokens->value.grid()) return 0;
    if (rows) *rows = tokens->value.grid()->rows;
    if (cols) *cols = tokens->value.grid()->cols;
    return 1;
}

dart_status dart_attention_create(size_t n, const float* weights, dart_attention** out) {
    DART_REQUIRE(out != nullptr && (weights != nullptr || n == 0));
    return guarded([&] {
        dart::AttentionMap m(n, std::vector<float>(weights, weights + n * n));
        dart::validate(m);
        *out = new dart_attention{std::move(m)};
    });
}

dart_status dart_attention_load(const char* path, dart_attention** out) {
    DART_REQUIRE(path != nullptr && out != nullptr);
    return guarded([&] { *out = new dart_attention{dart::io::read_attention(path)}; });
}

dart_status dart_attention_save(const dart_attention* attn, const char* path) {
    DART_REQUIRE(attn != nullptr && path != nullptr);
    return guarded([&] { dart::io::write_attention(path, attn->value); });
}

void dart_attention_free(dart_attention* attn) { delete attn; }
size_t dart_attention_n(const dart_attention* attn) { return attn ? attn->value.n() : 0; }

dart_status dart_attention_received(const dart_attention* attn, double* scores_out) {
    DART_REQUIRE(attn != nullptr && scores_out != nullptr);
    return guarded([&] {
        const auto s = dart::attention_received(attn->value);
        std::copy(s.begin(), s.end(), scores_out);
    });
}

void dart_config_default(dart_config* cfg) {
    if (cfg == nullptr) return;
    *cfg = dart_config{};
    cfg->budget = 0;
    cfg->ratio = 0.889;
    cfg->pivot_count = 8;
    cfg->pivot_kind = DART_PIVOT_K_NORM;
    cfg->direction = DART_MAX;
    cfg->norm_order = DART_L1;
    cfg->aggregator = DART_AGG_MAX;
    cfg->selection = DART_SELECT_GLOBAL;
    cfg->seed = 0;
    cfg->has_quota = 0;
    cfg->prune_visual_only = 1;
}

dart_status dart_resolve_budget(const dart_tokens* tokens, const dart_config* cfg, size_t* out) {
    DART_REQUIRE(tokens != nullptr && cfg != nullptr && out != nullptr);
    return guarded([&] {
        const auto c = to_config(*cfg);
        const auto mask = dart::prunable_mask(tokens->value, c);
        *out = dart::resolve_budget(c, static_cast<size_t>(std::count(mask.begin(), mask.end(), true)));
    });
}

dart_status dart_prune(const dart_tokens* tokens, const dart_tokens* keys, const dart_tokens* values,
                       const dart_attention* attn, const dart_config* cfg, dart_result** out) {
    DART_REQUIRE(tokens != nullptr && cfg != nullptr && out != nullptr);
    DART_REQUIRE(valid_enums(*cfg));
    return guarded([&] {
        auto r = dart::dart_prune(tokens->value, to_aux(keys, values), attn ? &attn->value : nullptr,
                                  to_config(*cfg));
        *out = new dart_result{std::move(r)};
    });
}

dart_status dart_prune_reference(const dart_tokens* tokens, const dart_tokens* keys, const dart_tokens* values,
                                 const dart_attention* attn, const dart_config* cfg, dart_result** out) {
    DART_REQUIRE(tokens != nullptr && cfg != nullptr && out != nullptr);
    DART_REQUIRE(valid_enums(*cfg));
    return guarded([&] {
        auto r = dart::synth::brute_force_prune(tokens->value, to_aux(keys, values),
                                                attn ? &attn->value : nullptr, to_config(*cfg));
        *out = new dart_result{std::move(r)};
    });
}

dart_status dart_random_prune(size_t n, size_t budget, uint64_t seed, dart_result** out) {
    DART_REQUIRE(out != nullptr);
    return guarded([&] { *out = new dart_result{dart::random_prune(n, budget, seed)}; });
}

dart_status dart_importance_prune(const double* scores, size_t n, size_t budget, dart_result** out) {
    DART_REQUIRE(out != nullptr && (scores != nullptr || n == 0));
    return guarded([&] {
        *out = new dart_result{dart::importance_prune(std::span<const double>(scores, n), budget)};
    });
}

void dart_result_free(dart_result* result) { delete result; }
size_t dart_result_n(const dart_result* r) { return r ? r->value.n : 0; }
size_t dart_result_retained_count(const dart_result* r) { return r ? r->value.retained.size() : 0; }
const size_t* dart_result_retained(const dart_result* r) { return r ? r->value.retained.data() : nullptr; }
size_t dart_result_pivot_count(const dart_result* r) { return r ? r->value.pivots.indices.size() : 0; }
const size_t* dart_result_pivots(const dart_result* r) { return r ? r->value.pivots.indices.data() : nullptr; }

const double* dart_result_scores(const dart_result* r) {
    return (r && !r->value.agg_dup.empty()) ? r->value.agg_dup.data() : nullptr;
}

double dart_result_tau(const dart_result* r) { return r ? r->value.tau : NAN; }
double dart_result_eps_eff(const dart_result* r) { return r ? r->value.eps_eff : NAN; }

dart_status dart_recalibration_bias(const dart_attention* attn, size_t budget, size_t samples, uint64_t seed,
                                    dart_bias* out) {
    DART_REQUIRE(attn != nullptr && out != nullptr);
    return guarded([&] {
        const auto b = dart::recalibration_bias(attn->value, budget, samples, seed);
        *out = dart_bias{b.mean, b.std_error, b.samples};
    });
}

dart_status dart_recalibration_bias_exhaustive(const dart_attention* attn, size_t budget, dart_bias* out) {
    DART_REQUIRE(attn != nullptr && out != nullptr);
    return guarded([&] {
        const auto b = dart::recalibration_bias_exhaustive(attn->value, budget);
        *out = dart_bias{b.mean, b.std_error, b.samples};
    });
}

dart_status dart_flops_compute(const dart_model_dims* dims, uint64_t n, uint64_t n_hat, dart_flops* out) {
    DART_REQUIRE(dims != nullptr && out != nullptr);
    return guarded([&] {
        const dart::ModelDims d{dims->layers, dims->hidden, dims->intermediate, dims->prune_layer};
        dart_flops f{};
        copy_decimal(dart::total_flops(d, n), f.total);
        copy_decimal(dart::post_prune_flops(d, n, n_hat), f.post);
        const auto ratio = dart::flops_reduction_ratio(d, n, n_hat);
        f.ratio = ratio.value;
        f.clamped = ratio.clamped ? 1 : 0;
        *out = f;
    });
}

dart_status dart_hausdorff_retained(const dart_tokens* tokens, const size_t* retained, size_t count, double* out) {
    DART_REQUIRE(tokens != nullptr && out != nullptr && (retained != nullptr || count == 0));
    return guarded([&] { *out = dart::hausdorff(tokens->value, std::span<const size_t>(retained, count)); });
}

dart_status dart_lipschitz_create(size_t out_dim, size_t in_dim, const double* weights, dart_lipschitz** out) {
    DART_REQUIRE(out != nullptr && weights != nullptr);
    return guarded([&] {
        *out = new dart_lipschitz{
            dart::LipschitzModel(out_dim, in_dim, std::vector<double>(weights, weights + out_dim * in_dim))};
    });
}

dart_status dart_lipschitz_random(size_t out_dim, size_t in_dim, uint64_t seed, dart_lipschitz** out) {
    DART_REQUIRE(out != nullptr);
    return guarded([&] { *out = new dart_lipschitz{dart::LipschitzModel::random(out_dim, in_dim, seed)}; });
}

void dart_lipschitz_free(dart_lipschitz* model) { delete model; }
double dart_lipschitz_certified_k(const dart_lipschitz* model) { return model ? model->value.certified_k() : NAN; }

dart_status dart_lipschitz_eval(const dart_lipschitz* model, const dart_tokens* tokens, const size_t* subset,
                                size_t count, double* out) {
    DART_REQUIRE(model != nullptr && tokens != nullptr && out != nullptr);
    return guarded([&] {
        const auto v = subset == nullptr ? model->value.eval(tokens->value)
                                         : model->value.eval(tokens->value, std::span<const size_t>(subset, count));
        std::copy(v.begin(), v.end(), out);
    });
}

dart_status dart_verify_bounds(const dart_tokens* tokens, const dart_result* result, const dart_lipschitz* model,
                               dart_bound_mode mode, int require_equal_norms, dart_bound_report* out) {
    DART_REQUIRE(tokens != nullptr && result != nullptr && out != nullptr);
    DART_REQUIRE(mode == DART_BOUND_NORMALIZED || mode == DART_BOUND_GENERAL);
    return guarded([&] {
        const auto rep = dart::verify_bounds(
            tokens->value, result->value, model ? &model->value : nullptr,
            mode == DART_BOUND_NORMALIZED ? dart::BoundMode::Normalized : dart::BoundMode::General,
            dart::VerifyOptions{require_equal_norms != 0});
        dart_bound_report r{};
        r.mode = mode;
        r.B = rep.B;
        r.eps_eff = rep.eps_eff;
        r.hausdorff = rep.hausdorff;
        r.radius = rep.radius;
        r.norms_equal = rep.norms_equal;
        r.pruned = rep.pruned;
        r.lemma1_ok = rep.lemma1_ok;
        r.lemma2_ok = rep.lemma2_ok;
        r.theorem1_ok = rep.theorem1_ok;
        r.theorem1_checked = rep.theorem1_checked;
        r.output_gap = rep.output_gap;
        r.certified_k = rep.certified_k;
        r.worst_margin = rep.worst_margin;
        *out = r;
    });
}

dart_status dart_overlap_stats(const dart_result* a, const dart_result* b, dart_overlap* out) {
    DART_REQUIRE(a != nullptr && b != nullptr && out != nullptr);
    return guarded([&] {
        const auto s = dart::overlap_stats(a->value, b->value);
        *out = dart_overlap{s.jaccard, s.min_overlap, s.intersection};
    });
}

dart_status dart_position_stats(const dart_result* result, const dart_tokens* tokens, dart_position* out) {
    DART_REQUIRE(result != nullptr && out != nullptr);
    return guarded([&] {
        std::optional<dart::Grid> grid;
        std::optional<std::vector<dart::Modality>> tags;
        if (tokens != nullptr) {
            grid = tokens->value.grid();
            tags = tokens->value.modality();
        }
        const auto s = dart::position_stats(result->value, result->value.n, grid, tags);
        *out = dart_position{s.mean_norm_index, s.grid_chi2.has_value(), s.grid_chi2.value_or(0.0)};
    });
}

dart_status dart_synth_clustered(size_t n, size_t d, size_t clusters, double spread, uint64_t seed, int normalize,
                                 dart_tokens** out, size_t* labels) {
    DART_REQUIRE(out != nullptr);
    return guarded([&] {
        auto c = dart::synth::gen_clustered({n, d, clusters, spread, seed, normalize != 0});
        if (labels != nullptr) std::copy(c.labels.begin(), c.labels.end(), labels);
        *out = new dart_tokens{std::move(c.tokens)};
    });
}

dart_status dart_synth_oversmoothed(size_t n, size_t d, size_t steps, double mixing, uint64_t seed, int normalize,
                                    dart_tokens** out) {
    DART_REQUIRE(out != nullptr);
    return guarded([&] {
        *out = new dart_tokens{dart::synth::gen_oversmoothed({n, d, steps, mixing, seed, normalize != 0})};
    });
}

dart_status dart_synth_counterexample(dart_tokens** out, dart_config* cfg) {
    DART_REQUIRE(out != nullptr);
    return guarded([&] {
        if (cfg != nullptr) *cfg = from_config(dart::synth::counterexample_config());
        *out = new dart_tokens{dart::synth::unequal_norm_counterexample()};
    });
}

}  // extern "C"
