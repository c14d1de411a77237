// Domain types shared by every part of the library.
//
// Storage is 32-bit float, row-major. Anything that accumulates (norms, dot
// products, similarities) does so in double through the canonical lane sum in
// numeric.hpp so results are reproducible bit-for-bit across builds.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dart {

enum class ErrorCode {
    EmptyMatrix,
    NonFinite,
    GridMismatch,
    ShapeMismatch,
    MissingAux,
    MissingAttention,
    QuotaExceedsModality,
    KExceedsN,
    BudgetOutOfRange,
    NotRowStochastic,
    EmptyRetention,
    EmptySet,
    NotNormalized,
    WrongAggregator,
    BadParams,
    TooLarge,
    Io,
    Format,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

enum class Modality : std::uint8_t { Visual = 0, Text = 1 };

struct Grid {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// n x d embedding rows with optional modality tags and a visual grid.
///
/// Construction does not validate; call validate() on anything that came from
/// outside the process.
class TokenMatrix {
public:
    TokenMatrix() = default;
    TokenMatrix(std::size_t n, std::size_t d, std::vector<float> data,
                std::optional<std::vector<Modality>> modality = std::nullopt,
                std::optional<Grid> grid = std::nullopt);

    std::size_t n() const noexcept { return n_; }
    std::size_t d() const noexcept { return d_; }

    std::span<const float> row(std::size_t i) const noexcept {
        return {data_.data() + i * d_, d_};
    }
    std::span<const float> data() const noexcept { return data_; }

    const std::optional<std::vector<Modality>>& modality() const noexcept { return modality_; }
    const std::optional<Grid>& grid() const noexcept { return grid_; }

    bool has_modality() const noexcept { return modality_.has_value(); }
    Modality modality_of(std::size_t i) const noexcept {
        return modality_ ? (*modality_)[i] : Modality::Visual;
    }
    std::size_t visual_count() const noexcept;

    /// Copy of the rows listed in `indices`, in that order. Tags are kept,
    /// grid is dropped.
    TokenMatrix subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> data_;
    std::optional<std::vector<Modality>> modality_;
    std::optional<Grid> grid_;
};

/// Optional key/value projections used by the K-norm and V-norm pivot rules.
/// Non-owning; the matrices must outlive the call they are passed to.
struct AuxFeatures {
    const TokenMatrix* keys = nullptr;
    const TokenMatrix* values = nullptr;
};

/// Row-stochastic n x n attention map.
class AttentionMap {
public:
    AttentionMap() = default;
    AttentionMap(std::size_t n, std::vector<float> weights);

    std::size_t n() const noexcept { return n_; }
    float at(std::size_t row, std::size_t col) const noexcept { return weights_[row * n_ + col]; }
    std::span<const float> row(std::size_t i) const noexcept { return {weights_.data() + i * n_, n_}; }
    std::span<const float> data() const noexcept { return weights_; }

    friend bool operator==(const AttentionMap&, const AttentionMap&) = default;

private:
    std::size_t n_ = 0;
    std::vector<float> weights_;
};

inline constexpr double kRowStochasticTolerance = 1e-4;

enum class PivotKind { Random, EmbedNorm, KNorm, VNorm, AttnScore };
enum class Direction { Max, Min };
enum class NormOrder { L1, L2 };

struct PivotStrategy {
    PivotKind kind = PivotKind::KNorm;
    Direction direction = Direction::Max;
    NormOrder norm_order = NormOrder::L1;

    friend bool operator==(const PivotStrategy&, const PivotStrategy&) = default;
};

enum class Aggregator { Max, Min, Mean };

/// How the budget-induced threshold is realized.
enum class Selection {
    Global,    // one cut over aggregated duplication
    PerPivot,  // pivots take turns pruning their most duplicated token
};

struct ModalityQuota {
    std::size_t visual = 0;
    std::size_t text = 0;

    friend bool operator==(const ModalityQuota&, const ModalityQuota&) = default;
};

struct ReductionConfig {
    std::optional<std::size_t> budget;
    std::optional<double> ratio;
    std::size_t pivot_count = 8;
    PivotStrategy strategy{};
    Aggregator aggregator = Aggregator::Max;
    Selection selection = Selection::Global;
    std::uint64_t seed = 0;
    std::optional<ModalityQuota> modality_quota;
    // With modality tags present only visual rows are prunable unless this is
    // cleared.
    bool prune_visual_only = true;
};

struct ModelDims {
    std::uint64_t layers = 0;        // T
    std::uint64_t hidden = 0;        // d
    std::uint64_t intermediate = 0;  // m
    std::uint64_t prune_layer = 0;   // L
};

/// Checks every TokenMatrix invariant and returns the input unchanged.
const TokenMatrix& validate(const TokenMatrix& tokens);
void validate(const AttentionMap& attn);
void validate_aux(const AuxFeatures& aux, std::size_t n);

/// Rows that may be pruned under `cfg`: the visual rows when tags exist and
/// prune_visual_only is set, otherwise every row.
std::vector<bool> prunable_mask(const TokenMatrix& tokens, const ReductionConfig& cfg);

/// Retention budget over the prunable rows. A ratio maps to
/// round(prunable * (1 - ratio)), half away from zero, clamped to [k, prunable].
std::size_t resolve_budget(const ReductionConfig& cfg, std::size_t prunable);

}  // namespace dart
