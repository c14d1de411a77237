/*
 * dart.h - C interface to the duplication-aware token reduction library.
 *
 * Objects are opaque handles created by *_create / *_load / *_prune calls and
 * released with the matching *_free. Every fallible call returns a
 * dart_status; on failure dart_last_error() holds a message for the calling
 * thread until its next failing call.
 */
#ifndef DART_H
#define DART_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DART_BUILDING_LIBRARY)
#    define DART_API __declspec(dllexport)
#  else
#    define DART_API __declspec(dllimport)
#  endif
#else
#  define DART_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dart_status {
    DART_OK = 0,
    DART_ERR_EMPTY_MATRIX,
    DART_ERR_NON_FINITE,
    DART_ERR_GRID_MISMATCH,
    DART_ERR_SHAPE_MISMATCH,
    DART_ERR_MISSING_AUX,
    DART_ERR_MISSING_ATTENTION,
    DART_ERR_QUOTA_EXCEEDS_MODALITY,
    DART_ERR_K_EXCEEDS_N,
    DART_ERR_BUDGET_OUT_OF_RANGE,
    DART_ERR_NOT_ROW_STOCHASTIC,
    DART_ERR_EMPTY_RETENTION,
    DART_ERR_EMPTY_SET,
    DART_ERR_NOT_NORMALIZED,
    DART_ERR_WRONG_AGGREGATOR,
    DART_ERR_BAD_PARAMS,
    DART_ERR_TOO_LARGE,
    DART_ERR_IO,
    DART_ERR_FORMAT,
    DART_ERR_INVALID_ARGUMENT,
    DART_ERR_INTERNAL
} dart_status;

/* Stable identifier such as "BudgetOutOfRange". */
DART_API const char* dart_status_name(dart_status status);
DART_API const char* dart_last_error(void);
DART_API const char* dart_version(void);

typedef struct dart_tokens dart_tokens;
typedef struct dart_attention dart_attention;
typedef struct dart_result dart_result;
typedef struct dart_lipschitz dart_lipschitz;

/* ---- token matrices ---------------------------------------------------- */

typedef enum dart_modality { DART_VISUAL = 0, DART_TEXT = 1 } dart_modality;

/* modality may be NULL; grid is used only when has_grid != 0. The matrix is
 * validated before a handle is returned. */
DART_API dart_status dart_tokens_create(size_t n, size_t d, const float* data, const uint8_t* modality,
                                        int has_grid, uint32_t grid_rows, uint32_t grid_cols,
                                        dart_tokens** out);
/* DTOK, or CSV when the path ends in ".csv". */
DART_API dart_status dart_tokens_load(const char* path, dart_tokens** out);
DART_API dart_status dart_tokens_save(const dart_tokens* tokens, const char* path);
DART_API void dart_tokens_free(dart_tokens* tokens);
DART_API size_t dart_tokens_n(const dart_tokens* tokens);
DART_API size_t dart_tokens_d(const dart_tokens* tokens);
DART_API const float* dart_tokens_data(const dart_tokens* tokens);
DART_API int dart_tokens_has_modality(const dart_tokens* tokens);
/* Returns 0 when no grid is attached. */
DART_API int dart_tokens_grid(const dart_tokens* tokens, uint32_t* rows, uint32_t* cols);

/* ---- attention maps ---------------------------------------------------- */

DART_API dart_status dart_attention_create(size_t n, const float* weights, dart_attention** out);
DART_API dart_status dart_attention_load(const char* path, dart_attention** out);
DART_API dart_status dart_attention_save(const dart_attention* attn, const char* path);
DART_API void dart_attention_free(dart_attention* attn);
DART_API size_t dart_attention_n(const dart_attention* attn);
/* Column means, n doubles. */
DART_API dart_status dart_attention_received(const dart_attention* attn, double* scores_out);

/* ---- configuration ----------------------------------------------------- */

typedef enum dart_pivot_kind {
    DART_PIVOT_RANDOM = 0,
    DART_PIVOT_EMBED_NORM,
    DART_PIVOT_K_NORM,
    DART_PIVOT_V_NORM,
    DART_PIVOT_ATTN_SCORE
} dart_pivot_kind;

typedef enum dart_direction { DART_MAX = 0, DART_MIN = 1 } dart_direction;
typedef enum dart_norm_order { DART_L1 = 0, DART_L2 = 1 } dart_norm_order;
typedef enum dart_aggregator { DART_AGG_MAX = 0, DART_AGG_MIN, DART_AGG_MEAN } dart_aggregator;
typedef enum dart_selection { DART_SELECT_GLOBAL = 0, DART_SELECT_PER_PIVOT } dart_selection;

typedef struct dart_config {
    size_t budget;  /* retained prunable tokens; 0 means derive from ratio */
    double ratio;   /* fraction pruned, (0, 1]; used when budget == 0 */
    size_t pivot_count;
    dart_pivot_kind pivot_kind;
    dart_direction direction;
    dart_norm_order norm_order; /* embed-norm only */
    dart_aggregator aggregator;
    dart_selection selection;
    uint64_t seed;
    int has_quota;
    size_t quota_visual;
    size_t quota_text;
    int prune_visual_only; /* with modality tags, text rows pass through */
} dart_config;

/* k = 8, K-norm max, max aggregation, global cut, seed 0, ratio 0.889. */
DART_API void dart_config_default(dart_config* cfg);

/* Retention budget over the prunable rows of tokens that dart_prune would use. */
DART_API dart_status dart_resolve_budget(const dart_tokens* tokens, const dart_config* cfg, size_t* out);

/* ---- pruning ----------------------------------------------------------- */

/* keys, values and attn may be NULL when the strategy does not need them. */
DART_API dart_status dart_prune(const dart_tokens* tokens, const dart_tokens* keys, const dart_tokens* values,
                                const dart_attention* attn, const dart_config* cfg, dart_result** out);
/* Unoptimized reference pruner, n <= 256. */
DART_API dart_status dart_prune_reference(const dart_tokens* tokens, const dart_tokens* keys,
                                          const dart_tokens* values, const dart_attention* attn,
                                          const dart_config* cfg, dart_result** out);
DART_API dart_status dart_random_prune(size_t n, size_t budget, uint64_t seed, dart_result** out);
DART_API dart_status dart_importance_prune(const double* scores, size_t n, size_t budget, dart_result** out);
DART_API void dart_result_free(dart_result* result);

DART_API size_t dart_result_n(const dart_result* result);
DART_API size_t dart_result_retained_count(const dart_result* result);
DART_API const size_t* dart_result_retained(const dart_result* result);
DART_API size_t dart_result_pivot_count(const dart_result* result);
DART_API const size_t* dart_result_pivots(const dart_result* result);
/* Per-token aggregated duplication (importance score for that baseline);
 * NULL for random retention. */
DART_API const double* dart_result_scores(const dart_result* result);
/* -inf when no non-pivot was kept. */
DART_API double dart_result_tau(const dart_result* result);
/* +inf when nothing was pruned. */
DART_API double dart_result_eps_eff(const dart_result* result);

/* ---- baselines --------------------------------------------------------- */

typedef struct dart_bias {
    double mean;
    double std_error;
    size_t samples;
} dart_bias;

DART_API dart_status dart_recalibration_bias(const dart_attention* attn, size_t budget, size_t samples,
                                             uint64_t seed, dart_bias* out);
/* Exact average over all subsets; n <= 20. */
DART_API dart_status dart_recalibration_bias_exhaustive(const dart_attention* attn, size_t budget,
                                                        dart_bias* out);

/* ---- FLOPs ------------------------------------------------------------- */

typedef struct dart_model_dims {
    uint64_t layers;
    uint64_t hidden;
    uint64_t intermediate;
    uint64_t prune_layer;
} dart_model_dims;

typedef struct dart_flops {
    char total[64]; /* exact decimal */
    char post[64];
    double ratio;   /* 1 - post/total, in [0, 1) */
    int clamped;    /* ratio reached 1 and was clamped */
} dart_flops;

DART_API dart_status dart_flops_compute(const dart_model_dims* dims, uint64_t n, uint64_t n_hat, dart_flops* out);

/* ---- analysis ---------------------------------------------------------- */

DART_API dart_status dart_hausdorff_retained(const dart_tokens* tokens, const size_t* retained, size_t count,
                                             double* out);

DART_API dart_status dart_lipschitz_create(size_t out_dim, size_t in_dim, const double* weights,
                                           dart_lipschitz** out);
DART_API dart_status dart_lipschitz_random(size_t out_dim, size_t in_dim, uint64_t seed, dart_lipschitz** out);
DART_API void dart_lipschitz_free(dart_lipschitz* model);
DART_API double dart_lipschitz_certified_k(const dart_lipschitz* model);
/* subset may be NULL to evaluate every row; out holds out_dim doubles. */
DART_API dart_status dart_lipschitz_eval(const dart_lipschitz* model, const dart_tokens* tokens,
                                         const size_t* subset, size_t count, double* out);

typedef enum dart_bound_mode { DART_BOUND_NORMALIZED = 0, DART_BOUND_GENERAL = 1 } dart_bound_mode;

typedef struct dart_bound_report {
    dart_bound_mode mode;
    double B;
    double eps_eff;
    double hausdorff;
    double radius;
    int norms_equal;
    size_t pruned;
    int lemma1_ok;
    int lemma2_ok;
    int theorem1_ok;
    int theorem1_checked;
    double output_gap;
    double certified_k;
    double worst_margin;
} dart_bound_report;

/* model may be NULL. require_equal_norms turns unequal norms into
 * DART_ERR_NOT_NORMALIZED instead of a report. */
DART_API dart_status dart_verify_bounds(const dart_tokens* tokens, const dart_result* result,
                                        const dart_lipschitz* model, dart_bound_mode mode,
                                        int require_equal_norms, dart_bound_report* out);

typedef struct dart_overlap {
    double jaccard;
    double min_overlap;
    size_t intersection;
} dart_overlap;

DART_API dart_status dart_overlap_stats(const dart_result* a, const dart_result* b, dart_overlap* out);

typedef struct dart_position {
    double mean_norm_index;
    int has_grid_chi2;
    double grid_chi2;
} dart_position;

/* Uses the grid and modality tags carried by tokens (may be NULL). */
DART_API dart_status dart_position_stats(const dart_result* result, const dart_tokens* tokens,
                                         dart_position* out);

/* ---- synthetic data ---------------------------------------------------- */

/* labels may be NULL, otherwise receives n cluster ids. */
DART_API dart_status dart_synth_clustered(size_t n, size_t d, size_t clusters, double spread, uint64_t seed,
                                          int normalize, dart_tokens** out, size_t* labels);
DART_API dart_status dart_synth_oversmoothed(size_t n, size_t d, size_t steps, double mixing, uint64_t seed,
                                             int normalize, dart_tokens** out);
/* Four tokens whose pruning breaks the equal-norm radius; cfg receives the
 * matching configuration. */
DART_API dart_status dart_synth_counterexample(dart_tokens** out, dart_config* cfg);

#ifdef __cplusplus
}
#endif

#endif /* DART_H */
