// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "dart/dart.h"

namespace {

dart_tokens* make_tokens(size_t n, size_t d, const std::vector<float>& data) {
    dart_tokens* t = nullptr;
    REQUIRE(dart_tokens_create(n, d, data.data(), nullptr, 0, 0, 0, &t) == DART_OK);
    return t;
}

}  // namespace

TEST_CASE("status names and version") {
    CHECK(std::string(dart_status_name(DART_OK)) == "Ok");
    CHECK(std::string(dart_status_name(DART_ERR_BUDGET_OUT_OF_RANGE)) == "BudgetOutOfRange");
    CHECK(std::string(dart_version()) == "0.1.0");
}

TEST_CASE("token handles") {
    const std::vector<float> data = {1, 0, 0, 1, 1, 1};
    const std::vector<uint8_t> tags = {1, 0, 0};
    dart_tokens* t = nullptr;
    REQUIRE(dart_tokens_create(3, 2, data.data(), tags.data(), 0, 0, 0, &t) == DART_OK);
    CHECK(dart_tokens_n(t) == 3);
    CHECK(dart_tokens_d(t) == 2);
    CHECK(dart_tokens_has_modality(t) == 1);
    CHECK(dart_tokens_data(t)[3] == 1.0f);
    uint32_t rows = 9, cols = 9;
    CHECK(dart_tokens_grid(t, &rows, &cols) == 0);
    dart_tokens_free(t);

    const float bad[] = {1.0f, NAN};
    dart_tokens* u = nullptr;
    CHECK(dart_tokens_create(1, 2, bad, nullptr, 0, 0, 0, &u) == DART_ERR_NON_FINITE);
    CHECK(u == nullptr);
    CHECK(std::string(dart_last_error()).find("row 0") != std::string::npos);

    CHECK(dart_tokens_create(1, 2, nullptr, nullptr, 0, 0, 0, &u) == DART_ERR_INVALID_ARGUMENT);
    CHECK(dart_tokens_load("/nonexistent/x.dtok", &u) == DART_ERR_IO);
    dart_tokens_free(nullptr);
}

TEST_CASE("save and load") {
    const std::vector<float> data = {1, 2, 3, 4, 5, 6, 7, 8};
    const std::vector<uint8_t> tags = {0, 0, 0, 0};
    dart_tokens* t = nullptr;
    REQUIRE(dart_tokens_create(4, 2, data.data(), tags.data(), 1, 2, 2, &t) == DART_OK);
    const std::string path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/dart_capi.dtok";
    REQUIRE(dart_tokens_save(t, path.c_str()) == DART_OK);
    dart_tokens* back = nullptr;
    REQUIRE(dart_tokens_load(path.c_str(), &back) == DART_OK);
    uint32_t rows = 0, cols = 0;
    CHECK(dart_tokens_grid(back, &rows, &cols) == 1);
    CHECK(rows == 2);
    CHECK(cols == 2);
    CHECK(std::memcmp(dart_tokens_data(back), data.data(), data.size() * sizeof(float)) == 0);
    std::remove(path.c_str());
    dart_tokens_free(t);
    dart_tokens_free(back);
}

TEST_CASE("pruning through the C API") {
    // Two tight clusters around (1,0) and (0,1) plus one outlier.
    const std::vector<float> data = {1.0f, 0.0f, 0.99f, 0.05f, 0.98f, 0.1f, 0.0f, 1.0f,
                                     0.05f, 0.99f, -1.0f, 0.0f};
    dart_tokens* t = make_tokens(6, 2, data);
    dart_config cfg;
    dart_config_default(&cfg);
    CHECK(cfg.pivot_count == 8);
    CHECK(cfg.aggregator == DART_AGG_MAX);
    cfg.pivot_count = 1;
    cfg.pivot_kind = DART_PIVOT_EMBED_NORM;
    cfg.norm_order = DART_L2;
    cfg.budget = 3;

    size_t budget = 0;
    REQUIRE(dart_resolve_budget(t, &cfg, &budget) == DART_OK);
    CHECK(budget == 3);

    dart_result* r = nullptr;
    REQUIRE(dart_prune(t, nullptr, nullptr, nullptr, &cfg, &r) == DART_OK);
    CHECK(dart_result_n(r) == 6);
    CHECK(dart_result_retained_count(r) == 3);
    CHECK(dart_result_pivot_count(r) == 1);
    CHECK(dart_result_pivots(r)[0] == 0);
    const size_t* kept = dart_result_retained(r);
    CHECK(kept[0] == 0);
    CHECK(kept[2] == 5);
    CHECK(dart_result_scores(r) != nullptr);
    CHECK(dart_result_tau(r) <= dart_result_eps_eff(r));

    dart_result* ref = nullptr;
    REQUIRE(dart_prune_reference(t, nullptr, nullptr, nullptr, &cfg, &ref) == DART_OK);
    CHECK(std::memcmp(dart_result_retained(ref), kept, 3 * sizeof(size_t)) == 0);

    dart_bound_report rep;
    REQUIRE(dart_verify_bounds(t, r, nullptr, DART_BOUND_GENERAL, 0, &rep) == DART_OK);
    CHECK(rep.lemma1_ok == 1);
    CHECK(rep.lemma2_ok == 1);
    CHECK(rep.theorem1_checked == 0);

    dart_overlap ov;
    REQUIRE(dart_overlap_stats(r, ref, &ov) == DART_OK);
    CHECK(ov.jaccard == 1.0);

    dart_position pos;
    REQUIRE(dart_position_stats(r, t, &pos) == DART_OK);
    CHECK(pos.has_grid_chi2 == 0);

    double h = -1.0;
    REQUIRE(dart_hausdorff_retained(t, kept, 3, &h) == DART_OK);
    CHECK(h >= 0.0);

    cfg.budget = 7;
    dart_result* none = nullptr;
    CHECK(dart_prune(t, nullptr, nullptr, nullptr, &cfg, &none) == DART_ERR_BUDGET_OUT_OF_RANGE);
    CHECK(none == nullptr);
    CHECK(std::strlen(dart_last_error()) > 0);

    cfg.budget = 3;
    cfg.pivot_kind = DART_PIVOT_K_NORM;
    CHECK(dart_prune(t, nullptr, nullptr, nullptr, &cfg, &none) == DART_ERR_MISSING_AUX);
    CHECK(dart_prune(t, t, nullptr, nullptr, &cfg, &none) == DART_OK);
    dart_result_free(none);

    dart_result_free(r);
    dart_result_free(ref);
    dart_tokens_free(t);
}

TEST_CASE("baselines and attention") {
    const float w[] = {0.2f, 0.8f, 0.6f, 0.4f};
    dart_attention* a = nullptr;
    REQUIRE(dart_attention_create(2, w, &a) == DART_OK);
    double s[2];
    REQUIRE(dart_attention_received(a, s) == DART_OK);
    CHECK(s[0] == doctest::Approx(0.4));
    CHECK(s[1] == doctest::Approx(0.6));

    dart_result* imp = nullptr;
    REQUIRE(dart_importance_prune(s, 2, 1, &imp) == DART_OK);
    CHECK(dart_result_retained(imp)[0] == 1);
    dart_result_free(imp);

    dart_result* rnd = nullptr;
    REQUIRE(dart_random_prune(10, 4, 42, &rnd) == DART_OK);
    const size_t expect[] = {1, 2, 3, 7};
    CHECK(std::memcmp(dart_result_retained(rnd), expect, sizeof expect) == 0);
    CHECK(dart_result_scores(rnd) == nullptr);
    dart_result_free(rnd);

    dart_bias b;
    REQUIRE(dart_recalibration_bias_exhaustive(a, 1, &b) == DART_OK);
    CHECK(b.samples == 2);
    CHECK(b.mean == doctest::Approx(0.5));
    REQUIRE(dart_recalibration_bias(a, 1, 100, 3, &b) == DART_OK);
    CHECK(b.samples == 100);

    const float bad[] = {0.5f, 0.1f, 0.5f, 0.5f};
    dart_attention* c = nullptr;
    CHECK(dart_attention_create(2, bad, &c) == DART_ERR_NOT_ROW_STOCHASTIC);
    dart_attention_free(a);
}

TEST_CASE("FLOPs strings are exact") {
    const dart_model_dims dims = {32, 4096, 11008, 2};
    dart_flops f;
    REQUIRE(dart_flops_compute(&dims, 2940, 380, &f) == DART_OK);
    CHECK(std::string(f.total) == "17063372390400");
    CHECK(std::string(f.post) == "2895013478400");
    CHECK(f.ratio == doctest::Approx(1.0 - 0.16966244492376897).epsilon(1e-15));
    CHECK(f.clamped == 0);
    const dart_model_dims bad = {0, 1, 1, 0};
    CHECK(dart_flops_compute(&bad, 1, 1, &f) == DART_ERR_BAD_PARAMS);
}

TEST_CASE("Lipschitz and synthetic data") {
    const double id[] = {1, 0, 0, 1};
    dart_lipschitz* m = nullptr;
    REQUIRE(dart_lipschitz_create(2, 2, id, &m) == DART_OK);
    CHECK(dart_lipschitz_certified_k(m) == doctest::Approx(std::sqrt(2.0)));

    dart_tokens* t = nullptr;
    dart_config cfg;
    REQUIRE(dart_synth_counterexample(&t, &cfg) == DART_OK);
    double out[2];
    REQUIRE(dart_lipschitz_eval(m, t, nullptr, 0, out) == DART_OK);
    CHECK(out[0] == 1.0f);
    dart_result* r = nullptr;
    REQUIRE(dart_prune(t, nullptr, nullptr, nullptr, &cfg, &r) == DART_OK);
    dart_bound_report rep;
    REQUIRE(dart_verify_bounds(t, r, m, DART_BOUND_NORMALIZED, 0, &rep) == DART_OK);
    CHECK(rep.lemma1_ok == 0);
    REQUIRE(dart_verify_bounds(t, r, m, DART_BOUND_GENERAL, 0, &rep) == DART_OK);
    CHECK(rep.lemma1_ok == 1);
    CHECK(rep.theorem1_ok == 1);
    CHECK(dart_verify_bounds(t, r, m, DART_BOUND_NORMALIZED, 1, &rep) == DART_ERR_NOT_NORMALIZED);
    dart_result_free(r);
    dart_tokens_free(t);
    dart_lipschitz_free(m);

    std::vector<size_t> labels(12);
    dart_tokens* c = nullptr;
    REQUIRE(dart_synth_clustered(12, 4, 3, 0.05, 1, 1, &c, labels.data()) == DART_OK);
    CHECK(labels[4] == 1);
    dart_tokens_free(c);
    dart_tokens* o = nullptr;
    REQUIRE(dart_synth_oversmoothed(8, 4, 2, 0.3, 1, 1, &o) == DART_OK);
    CHECK(dart_tokens_n(o) == 8);
    dart_tokens_free(o);
}
