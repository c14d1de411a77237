// dart: command-line front end over the C interface.
//
// stdout carries only the JSON report; failures print {"code", "message"} on
// stderr. Exit codes: 0 ok, 1 bound violated (verify), 2 input error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dart/dart.h"
#include "json.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;

struct CliError : std::runtime_error {
    CliError(std::string code, const std::string& message) : std::runtime_error(message), code(std::move(code)) {}
    std::string code;
};

void check(dart_status status) {
    if (status != DART_OK) throw CliError(dart_status_name(status), dart_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Tokens = std::unique_ptr<dart_tokens, Deleter<dart_tokens, dart_tokens_free>>;
using Attention = std::unique_ptr<dart_attention, Deleter<dart_attention, dart_attention_free>>;
using Result = std::unique_ptr<dart_result, Deleter<dart_result, dart_result_free>>;
using Lipschitz = std::unique_ptr<dart_lipschitz, Deleter<dart_lipschitz, dart_lipschitz_free>>;

Tokens load_tokens(const std::string& path) {
    dart_tokens* t = nullptr;
    check(dart_tokens_load(path.c_str(), &t));
    return Tokens(t);
}

Attention load_attention(const std::string& path) {
    dart_attention* a = nullptr;
    check(dart_attention_load(path.c_str(), &a));
    return Attention(a);
}

// Reports carry nine significant digits; non-finite values become null.
json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

json big(const char* decimal) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(decimal, &used);
        if (decimal[used] == '\0') return v;
    } catch (const std::out_of_range&) {
    }
    return std::string(decimal);
}

json indices(const std::size_t* data, std::size_t count) {
    json arr = json::array();
    for (std::size_t i = 0; i < count; ++i) arr.push_back(data[i]);
    return arr;
}

void emit(const json& report, const std::string& out_path) {
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError("Io", "cannot write " + out_path);
    out << text;
}

// ---------------------------------------------------------------------------
// Shared pruning flags

struct StrategySpec {
    std::string name;
    dart_pivot_kind kind = DART_PIVOT_K_NORM;
    dart_direction direction = DART_MAX;
    dart_norm_order norm = DART_L1;
    enum class Baseline { None, Random, Importance } baseline = Baseline::None;
};

StrategySpec parse_strategy(const std::string& s) {
    StrategySpec spec;
    spec.name = s;
    if (s == "random") {
        spec.kind = DART_PIVOT_RANDOM;
        return spec;
    }
    if (s == "baseline-random") {
        spec.baseline = StrategySpec::Baseline::Random;
        return spec;
    }
    if (s == "baseline-importance") {
        spec.baseline = StrategySpec::Baseline::Importance;
        return spec;
    }
    const auto dash = s.rfind('-');
    if (dash == std::string::npos) throw CliError("Usage", "unknown strategy " + s);
    const std::string head = s.substr(0, dash);
    const std::string dir = s.substr(dash + 1);
    if (dir == "max") {
        spec.direction = DART_MAX;
    } else if (dir == "min") {
        spec.direction = DART_MIN;
    } else {
        throw CliError("Usage", "strategy must end in -max or -min: " + s);
    }
    if (head == "knorm") {
        spec.kind = DART_PIVOT_K_NORM;
    } else if (head == "vnorm") {
        spec.kind = DART_PIVOT_V_NORM;
    } else if (head == "attn") {
        spec.kind = DART_PIVOT_ATTN_SCORE;
    } else if (head == "embed-l1") {
        spec.kind = DART_PIVOT_EMBED_NORM;
        spec.norm = DART_L1;
    } else if (head == "embed-l2" || head == "embed-norm") {
        spec.kind = DART_PIVOT_EMBED_NORM;
        spec.norm = DART_L2;
    } else {
        throw CliError("Usage", "unknown strategy " + s);
    }
    return spec;
}

const char* aggregator_name(dart_aggregator a) {
    switch (a) {
        case DART_AGG_MAX: return "max";
        case DART_AGG_MIN: return "min";
        case DART_AGG_MEAN: return "mean";
    }
    return "?";
}

struct PruneArgs {
    std::string tokens;
    std::string attn;
    std::string keys;
    std::string values;
    std::optional<double> ratio;
    std::optional<std::size_t> budget;
    std::size_t pivots = 8;
    std::string strategy = "knorm-max";
    std::string aggregator = "max";
    std::string selection = "global";
    std::uint64_t seed = 0;
    std::string quota;
    bool all_prunable = false;
    std::string out;

    void attach(CLI::App* app, bool with_strategy = true) {
        app->add_option("--tokens", tokens, "token matrix (DTOK or .csv)")->required();
        app->add_option("--attn", attn, "attention map (DATT)");
        app->add_option("--keys", keys, "key matrix for K-norm pivots (DTOK or .csv)");
        app->add_option("--values", values, "value matrix for V-norm pivots (DTOK or .csv)");
        auto* r = app->add_option("--ratio", ratio, "fraction of prunable tokens removed, (0, 1]");
        auto* b = app->add_option("--budget", budget, "prunable tokens retained");
        r->excludes(b);
        app->add_option("--pivots", pivots, "pivot count k")->capture_default_str();
        if (with_strategy) {
            app->add_option("--strategy", strategy,
                            "random | embed-l1-{max,min} | embed-l2-{max,min} | knorm-{max,min} | "
                            "vnorm-{max,min} | attn-{max,min}")
                ->capture_default_str();
        }
        app->add_option("--aggregator", aggregator, "max | min | mean")->capture_default_str();
        app->add_option("--selection", selection, "global | per-pivot")->capture_default_str();
        app->add_option("--seed", seed, "seed for random pivots")->capture_default_str();
        app->add_option("--quota", quota, "visual,text pivot quota");
        app->add_flag("--all-prunable", all_prunable, "prune text-tagged rows as well");
        app->add_option("--out", out, "write the report here instead of stdout");
    }
};

struct Inputs {
    Tokens tokens;
    Tokens keys;
    Tokens values;
    Attention attn;
    std::string keys_source = "none";
    std::string values_source = "none";
};

Inputs load_inputs(const PruneArgs& a) {
    Inputs in;
    in.tokens = load_tokens(a.tokens);
    if (!a.keys.empty()) {
        in.keys = load_tokens(a.keys);
        in.keys_source = "file";
    }
    if (!a.values.empty()) {
        in.values = load_tokens(a.values);
        in.values_source = "file";
    }
    if (!a.attn.empty()) in.attn = load_attention(a.attn);
    return in;
}

dart_config make_config(const PruneArgs& a, const StrategySpec& spec, std::uint64_t seed) {
    dart_config cfg;
    dart_config_default(&cfg);
    if (a.budget) {
        if (*a.budget == 0) throw CliError("BudgetOutOfRange", "budget must be at least 1");
        cfg.budget = *a.budget;
    } else if (a.ratio) {
        cfg.ratio = *a.ratio;
    }
    cfg.pivot_count = a.pivots;
    cfg.pivot_kind = spec.kind;
    cfg.direction = spec.direction;
    cfg.norm_order = spec.norm;
    if (a.aggregator == "max") {
        cfg.aggregator = DART_AGG_MAX;
    } else if (a.aggregator == "min") {
        cfg.aggregator = DART_AGG_MIN;
    } else if (a.aggregator == "mean") {
        cfg.aggregator = DART_AGG_MEAN;
    } else {
        throw CliError("Usage", "unknown aggregator " + a.aggregator);
    }
    if (a.selection == "global") {
        cfg.selection = DART_SELECT_GLOBAL;
    } else if (a.selection == "per-pivot") {
        cfg.selection = DART_SELECT_PER_PIVOT;
    } else {
        throw CliError("Usage", "unknown selection " + a.selection);
    }
    cfg.seed = seed;
    if (!a.quota.empty()) {
        const auto comma = a.quota.find(',');
        if (comma == std::string::npos) throw CliError("Usage", "--quota expects visual,text");
        try {
            cfg.quota_visual = std::stoull(a.quota.substr(0, comma));
            cfg.quota_text = std::stoull(a.quota.substr(comma + 1));
        } catch (const std::exception&) {
            throw CliError("Usage", "--quota expects two integers");
        }
        cfg.has_quota = 1;
    }
    cfg.prune_visual_only = a.all_prunable ? 0 : 1;
    return cfg;
}

// K/V-norm pivots without a projection file fall back to the token rows.
void resolve_sources(Inputs& in, const StrategySpec& spec) {
    if (spec.kind == DART_PIVOT_K_NORM && spec.baseline == StrategySpec::Baseline::None && !in.keys) {
        in.keys_source = "tokens";
    }
    if (spec.kind == DART_PIVOT_V_NORM && spec.baseline == StrategySpec::Baseline::None && !in.values) {
        in.values_source = "tokens";
    }
}

const dart_tokens* keys_for(const Inputs& in) {
    if (in.keys) return in.keys.get();
    return in.keys_source == "tokens" ? in.tokens.get() : nullptr;
}

const dart_tokens* values_for(const Inputs& in) {
    if (in.values) return in.values.get();
    return in.values_source == "tokens" ? in.tokens.get() : nullptr;
}

json config_json(const PruneArgs& a, const Inputs& in, const dart_config& cfg, std::size_t budget,
                 const std::string& strategy) {
    json c;
    c["tokens"] = a.tokens;
    c["n"] = dart_tokens_n(in.tokens.get());
    c["d"] = dart_tokens_d(in.tokens.get());
    c["budget"] = budget;
    c["ratio"] = a.ratio ? num(*a.ratio) : json(nullptr);
    c["pivots"] = cfg.pivot_count;
    c["strategy"] = strategy;
    c["aggregator"] = aggregator_name(cfg.aggregator);
    c["selection"] = a.selection;
    c["seed"] = cfg.seed;
    c["quota"] = cfg.has_quota ? json::array({cfg.quota_visual, cfg.quota_text}) : json(nullptr);
    c["prune_visual_only"] = cfg.prune_visual_only != 0;
    c["keys_source"] = in.keys_source;
    c["values_source"] = in.values_source;
    return c;
}

json bounds_json(const dart_bound_report& r) {
    json b;
    b["mode"] = r.mode == DART_BOUND_NORMALIZED ? "normalized" : "general";
    b["B"] = num(r.B);
    b["eps_eff"] = num(r.eps_eff);
    b["hausdorff"] = num(r.hausdorff);
    b["radius"] = num(r.radius);
    b["norms_equal"] = r.norms_equal != 0;
    b["pruned"] = r.pruned;
    b["lemma1_ok"] = r.lemma1_ok != 0;
    b["lemma2_ok"] = r.lemma2_ok != 0;
    b["theorem1_ok"] = r.theorem1_ok != 0;
    b["theorem1_checked"] = r.theorem1_checked != 0;
    b["output_gap"] = r.theorem1_checked ? num(r.output_gap) : json(nullptr);
    b["certified_k"] = r.theorem1_checked ? num(r.certified_k) : json(nullptr);
    b["worst_margin"] = num(r.worst_margin);
    return b;
}

json position_json(const dart_result* result, const dart_tokens* tokens) {
    dart_position p{};
    check(dart_position_stats(result, tokens, &p));
    json j;
    j["mean_norm_index"] = num(p.mean_norm_index);
    j["grid_chi2"] = p.has_grid_chi2 ? num(p.grid_chi2) : json(nullptr);
    return j;
}

json retention_json(const dart_result* r) {
    json j;
    j["retained"] = indices(dart_result_retained(r), dart_result_retained_count(r));
    j["pivots"] = indices(dart_result_pivots(r), dart_result_pivot_count(r));
    j["tau"] = num(dart_result_tau(r));
    j["eps_eff"] = num(dart_result_eps_eff(r));
    return j;
}

struct ModelArgs {
    std::uint64_t layers = 32;
    std::uint64_t hidden = 4096;
    std::uint64_t ffn = 11008;
    std::uint64_t prune_layer = 2;

    void attach(CLI::App* app) {
        app->add_option("--model-layers", layers, "T for FLOPs accounting")->capture_default_str();
        app->add_option("--model-hidden", hidden, "d for FLOPs accounting")->capture_default_str();
        app->add_option("--model-ffn", ffn, "m for FLOPs accounting")->capture_default_str();
        app->add_option("--prune-layer", prune_layer, "L for FLOPs accounting")->capture_default_str();
    }
    dart_model_dims dims() const { return {layers, hidden, ffn, prune_layer}; }
};

json flops_json(const dart_model_dims& dims, std::uint64_t n, std::uint64_t n_hat) {
    dart_flops f{};
    check(dart_flops_compute(&dims, n, n_hat, &f));
    json j;
    j["model"] = {{"T", dims.layers}, {"d", dims.hidden}, {"m", dims.intermediate}, {"L", dims.prune_layer}};
    j["n"] = n;
    j["n_hat"] = n_hat;
    j["total"] = big(f.total);
    j["post"] = big(f.post);
    j["post_fraction"] = num(1.0 - f.ratio);
    j["ratio"] = num(f.ratio);
    j["clamped"] = f.clamped != 0;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommands

int run_prune(const PruneArgs& a, const ModelArgs& model, bool timing) {
    const auto spec = parse_strategy(a.strategy);
    if (spec.baseline != StrategySpec::Baseline::None) {
        throw CliError("Usage", "baselines are available through the compare subcommand");
    }
    Inputs in = load_inputs(a);
    resolve_sources(in, spec);
    const auto cfg = make_config(a, spec, a.seed);
    std::size_t budget = 0;
    check(dart_resolve_budget(in.tokens.get(), &cfg, &budget));

    dart_result* raw = nullptr;
    const auto start = std::chrono::steady_clock::now();
    check(dart_prune(in.tokens.get(), keys_for(in), values_for(in), in.attn.get(), &cfg, &raw));
    const auto stop = std::chrono::steady_clock::now();
    Result result(raw);

    json report;
    report["config"] = config_json(a, in, cfg, budget, spec.name);
    const json retention = retention_json(result.get());
    for (const auto& [k, v] : retention.items()) report[k] = v;
    report["flops"] = flops_json(model.dims(), dart_tokens_n(in.tokens.get()),
                                 dart_result_retained_count(result.get()));
    if (cfg.aggregator == DART_AGG_MAX) {
        dart_bound_report b{};
        check(dart_verify_bounds(in.tokens.get(), result.get(), nullptr, DART_BOUND_GENERAL, 0, &b));
        report["bounds"] = bounds_json(b);
    } else {
        report["bounds"] = nullptr;
    }
    report["position"] = position_json(result.get(), in.tokens.get());
    if (timing) {
        report["timing_ms"] = num(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    emit(report, a.out);
    return kExitOk;
}

Result run_one(const StrategySpec& spec, const Inputs& in, const PruneArgs& a, std::uint64_t seed,
               std::size_t budget) {
    dart_result* raw = nullptr;
    const std::size_t n = dart_tokens_n(in.tokens.get());
    switch (spec.baseline) {
        case StrategySpec::Baseline::Random:
            check(dart_random_prune(n, budget, seed, &raw));
            break;
        case StrategySpec::Baseline::Importance: {
            if (!in.attn) throw CliError("MissingAttention", "baseline-importance needs --attn");
            std::vector<double> scores(dart_attention_n(in.attn.get()));
            check(dart_attention_received(in.attn.get(), scores.data()));
            if (scores.size() != n) throw CliError("ShapeMismatch", "attention map size differs from token count");
            check(dart_importance_prune(scores.data(), n, budget, &raw));
            break;
        }
        case StrategySpec::Baseline::None: {
            const auto cfg = make_config(a, spec, seed);
            check(dart_prune(in.tokens.get(), keys_for(in), values_for(in), in.attn.get(), &cfg, &raw));
            break;
        }
    }
    return Result(raw);
}

int run_compare(const PruneArgs& a, const std::string& strat_a, const std::string& strat_b,
                std::optional<std::uint64_t> seed_a, std::optional<std::uint64_t> seed_b) {
    const auto spec_a = parse_strategy(strat_a);
    const auto spec_b = parse_strategy(strat_b);
    Inputs in = load_inputs(a);
    resolve_sources(in, spec_a);
    resolve_sources(in, spec_b);
    const auto base_cfg = make_config(a, parse_strategy("random"), a.seed);
    std::size_t budget = 0;
    check(dart_resolve_budget(in.tokens.get(), &base_cfg, &budget));

    const std::uint64_t sa = seed_a.value_or(a.seed);
    const std::uint64_t sb = seed_b.value_or(a.seed);
    const auto ra = run_one(spec_a, in, a, sa, budget);
    const auto rb = run_one(spec_b, in, a, sb, budget);
    dart_overlap ov{};
    check(dart_overlap_stats(ra.get(), rb.get(), &ov));

    json report;
    report["config"] = config_json(a, in, base_cfg, budget, strat_a + " vs " + strat_b);
    report["config"].erase("strategy");
    report["config"].erase("seed");
    json ja = retention_json(ra.get());
    ja["strategy"] = strat_a;
    ja["seed"] = sa;
    json jb = retention_json(rb.get());
    jb["strategy"] = strat_b;
    jb["seed"] = sb;
    report["a"] = ja;
    report["b"] = jb;
    report["overlap"] = {{"jaccard", num(ov.jaccard)},
                         {"min_overlap", num(ov.min_overlap)},
                         {"intersection", ov.intersection}};
    report["position"] = {{"a", position_json(ra.get(), in.tokens.get())},
                          {"b", position_json(rb.get(), in.tokens.get())}};
    emit(report, a.out);
    return kExitOk;
}

int run_verify(const PruneArgs& a, const std::string& mode, std::size_t lip_dout, std::uint64_t lip_seed,
               bool no_lipschitz) {
    dart_bound_mode m;
    if (mode == "normalized") {
        m = DART_BOUND_NORMALIZED;
    } else if (mode == "general") {
        m = DART_BOUND_GENERAL;
    } else {
        throw CliError("Usage", "--mode must be normalized or general");
    }
    const auto spec = parse_strategy(a.strategy);
    if (spec.baseline != StrategySpec::Baseline::None) throw CliError("Usage", "verify needs a pivot strategy");
    Inputs in = load_inputs(a);
    resolve_sources(in, spec);
    const auto cfg = make_config(a, spec, a.seed);
    std::size_t budget = 0;
    check(dart_resolve_budget(in.tokens.get(), &cfg, &budget));
    dart_result* raw = nullptr;
    check(dart_prune(in.tokens.get(), keys_for(in), values_for(in), in.attn.get(), &cfg, &raw));
    Result result(raw);

    Lipschitz model;
    if (!no_lipschitz) {
        dart_lipschitz* lm = nullptr;
        check(dart_lipschitz_random(lip_dout, dart_tokens_d(in.tokens.get()), lip_seed, &lm));
        model.reset(lm);
    }
    dart_bound_report rep{};
    check(dart_verify_bounds(in.tokens.get(), result.get(), model.get(), m, 0, &rep));

    json report;
    report["config"] = config_json(a, in, cfg, budget, spec.name);
    report["lipschitz"] = no_lipschitz ? json(nullptr) : json{{"out_dim", lip_dout}, {"seed", lip_seed}};
    report["retained"] = indices(dart_result_retained(result.get()), dart_result_retained_count(result.get()));
    report["pivots"] = indices(dart_result_pivots(result.get()), dart_result_pivot_count(result.get()));
    report["bounds"] = bounds_json(rep);
    const bool ok = rep.lemma1_ok && rep.lemma2_ok && rep.theorem1_ok;
    report["ok"] = ok;
    emit(report, a.out);
    return ok ? kExitOk : kExitViolation;
}

int run_flops(const dart_model_dims& dims, std::uint64_t n, std::uint64_t n_hat, const std::string& out) {
    emit(flops_json(dims, n, n_hat), out);
    return kExitOk;
}

struct SynthArgs {
    std::string kind = "clustered";
    std::size_t n = 60;
    std::size_t d = 16;
    std::size_t clusters = 3;
    double spread = 0.05;
    std::size_t steps = 0;
    double mixing = 0.3;
    std::uint64_t seed = 0;
    bool no_normalize = false;
    std::string out;
    std::string labels;
};

int run_synth(const SynthArgs& s) {
    Tokens tokens;
    json summary;
    summary["kind"] = s.kind;
    dart_tokens* raw = nullptr;
    if (s.kind == "clustered") {
        std::vector<std::size_t> labels(s.n);
        check(dart_synth_clustered(s.n, s.d, s.clusters, s.spread, s.seed, s.no_normalize ? 0 : 1, &raw,
                                   labels.data()));
        tokens.reset(raw);
        summary["clusters"] = s.clusters;
        summary["spread"] = num(s.spread);
        if (!s.labels.empty()) {
            std::ofstream lf(s.labels, std::ios::binary | std::ios::trunc);
            if (!lf) throw CliError("Io", "cannot write " + s.labels);
            for (std::size_t l : labels) lf << l << "\n";
        }
    } else if (s.kind == "oversmoothed") {
        check(dart_synth_oversmoothed(s.n, s.d, s.steps, s.mixing, s.seed, s.no_normalize ? 0 : 1, &raw));
        tokens.reset(raw);
        summary["steps"] = s.steps;
        summary["mixing"] = num(s.mixing);
    } else if (s.kind == "counterexample") {
        dart_config cfg;
        check(dart_synth_counterexample(&raw, &cfg));
        tokens.reset(raw);
        summary["suggested"] = {{"strategy", "embed-l2-max"}, {"pivots", cfg.pivot_count}, {"budget", cfg.budget}};
    } else {
        throw CliError("Usage", "--kind must be clustered, oversmoothed or counterexample");
    }
    check(dart_tokens_save(tokens.get(), s.out.c_str()));
    summary["n"] = dart_tokens_n(tokens.get());
    summary["d"] = dart_tokens_d(tokens.get());
    summary["seed"] = s.seed;
    summary["normalized"] = s.kind != "counterexample" && !s.no_normalize;
    summary["out"] = s.out;
    emit(summary, "");
    return kExitOk;
}

int run_bias(const std::string& attn_path, std::size_t budget, std::size_t samples, std::uint64_t seed,
             bool exhaustive, const std::string& out) {
    auto attn = load_attention(attn_path);
    json report;
    report["attn"] = attn_path;
    report["n"] = dart_attention_n(attn.get());
    report["budget"] = budget;
    dart_bias b{};
    check(dart_recalibration_bias(attn.get(), budget, samples, seed, &b));
    report["monte_carlo"] = {{"samples", b.samples}, {"seed", seed}, {"mean", num(b.mean)},
                             {"std_error", num(b.std_error)}};
    if (exhaustive) {
        dart_bias e{};
        check(dart_recalibration_bias_exhaustive(attn.get(), budget, &e));
        report["exhaustive"] = {{"subsets", e.samples}, {"mean", num(e.mean)}};
    }
    emit(report, out);
    return kExitOk;
}

void print_error(const std::string& code, const std::string& message) {
    std::cerr << json{{"code", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Duplication-aware token reduction"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dart_version());

    PruneArgs prune_args;
    ModelArgs prune_model;
    bool timing = false;
    auto* prune = app.add_subcommand("prune", "select pivots and prune duplicated tokens");
    prune_args.attach(prune);
    prune_model.attach(prune);
    prune->add_flag("--timing", timing, "record pruning wall time as timing_ms");

    PruneArgs cmp_args;
    std::string strat_a = "knorm-max";
    std::string strat_b = "knorm-min";
    std::optional<std::uint64_t> seed_a;
    std::optional<std::uint64_t> seed_b;
    auto* compare = app.add_subcommand("compare", "run two strategies at one budget and report their overlap");
    cmp_args.attach(compare, false);
    compare->add_option("--strategy-a", strat_a, "first strategy (pivot strategy, baseline-random, baseline-importance)")
        ->capture_default_str();
    compare->add_option("--strategy-b", strat_b, "second strategy")->capture_default_str();
    compare->add_option("--seed-a", seed_a, "seed for the first strategy (default --seed)");
    compare->add_option("--seed-b", seed_b, "seed for the second strategy (default --seed)");

    PruneArgs ver_args;
    std::string mode = "general";
    std::size_t lip_dout = 8;
    std::uint64_t lip_seed = 0;
    bool no_lipschitz = false;
    auto* verify = app.add_subcommand("verify", "prune, then check the distance and output-drift bounds");
    ver_args.attach(verify);
    verify->add_option("--mode", mode, "normalized | general")->capture_default_str();
    verify->add_option("--lipschitz-dout", lip_dout, "output size of the max-pool Lipschitz model")
        ->capture_default_str();
    verify->add_option("--lipschitz-seed", lip_seed, "seed for the Lipschitz model weights")->capture_default_str();
    verify->add_flag("--no-lipschitz", no_lipschitz, "skip the output-drift check");

    dart_model_dims dims{32, 4096, 11008, 2};
    std::uint64_t fl_n = 0;
    std::uint64_t fl_nhat = 0;
    std::string fl_out;
    auto* flops = app.add_subcommand("flops", "FLOPs before and after pruning");
    flops->add_option("--T", dims.layers, "transformer layers")->capture_default_str();
    flops->add_option("--d", dims.hidden, "hidden size")->capture_default_str();
    flops->add_option("--m", dims.intermediate, "FFN intermediate size")->capture_default_str();
    flops->add_option("--L", dims.prune_layer, "layer after which tokens are pruned")->capture_default_str();
    flops->add_option("--n", fl_n, "sequence length before pruning")->required();
    flops->add_option("--n-hat", fl_nhat, "sequence length after pruning")->required();
    flops->add_option("--out", fl_out, "write the report here instead of stdout");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "write a synthetic DTOK file");
    synth->add_option("--kind", synth_args.kind, "clustered | oversmoothed | counterexample")->capture_default_str();
    synth->add_option("--n", synth_args.n, "tokens")->capture_default_str();
    synth->add_option("--d", synth_args.d, "dimension")->capture_default_str();
    synth->add_option("--clusters", synth_args.clusters, "clusters (clustered)")->capture_default_str();
    synth->add_option("--spread", synth_args.spread, "Gaussian spread around centers (clustered)")
        ->capture_default_str();
    synth->add_option("--steps", synth_args.steps, "mixing rounds (oversmoothed)")->capture_default_str();
    synth->add_option("--mixing", synth_args.mixing, "mixing weight (oversmoothed)")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "generator seed")->capture_default_str();
    synth->add_flag("--no-normalize", synth_args.no_normalize, "keep raw row norms");
    synth->add_option("--labels", synth_args.labels, "write cluster labels, one per line (clustered)");
    synth->add_option("--out", synth_args.out, "output DTOK path")->required();

    std::string bias_attn;
    std::size_t bias_budget = 1;
    std::size_t bias_samples = 1000;
    std::uint64_t bias_seed = 0;
    bool bias_exhaustive = false;
    std::string bias_out;
    auto* bias = app.add_subcommand("bias", "estimate importance-score drift after removing tokens");
    bias->add_option("--attn", bias_attn, "attention map (DATT)")->required();
    bias->add_option("--budget", bias_budget, "retained subset size")->required();
    bias->add_option("--samples", bias_samples, "Monte-Carlo subsets")->capture_default_str();
    bias->add_option("--seed", bias_seed, "sampling seed")->capture_default_str();
    bias->add_flag("--exhaustive", bias_exhaustive, "also average over every subset (n <= 20)");
    bias->add_option("--out", bias_out, "write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("Usage", e.what());
        return kExitInput;
    }

    try {
        if (*prune) return run_prune(prune_args, prune_model, timing);
        if (*compare) return run_compare(cmp_args, strat_a, strat_b, seed_a, seed_b);
        if (*verify) return run_verify(ver_args, mode, lip_dout, lip_seed, no_lipschitz);
        if (*flops) return run_flops(dims, fl_n, fl_nhat, fl_out);
        if (*synth) return run_synth(synth_args);
        if (*bias) return run_bias(bias_attn, bias_budget, bias_samples, bias_seed, bias_exhaustive, bias_out);
    } catch (const CliError& e) {
        print_error(e.code, e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        print_error("Internal", e.what());
        return kExitInput;
    }
    return kExitInput;
}
