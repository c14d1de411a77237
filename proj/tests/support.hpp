// Helpers shared by the unit tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "dart/core.hpp"
#include "dart/rng.hpp"

namespace dart::testing {

inline TokenMatrix rows(std::initializer_list<std::initializer_list<float>> r) {
    std::vector<float> data;
    std::size_t d = 0;
    for (const auto& row : r) {
        d = row.size();
        data.insert(data.end(), row.begin(), row.end());
    }
    return TokenMatrix(r.size(), d, std::move(data));
}

inline AttentionMap attention(std::initializer_list<std::initializer_list<float>> r) {
    std::vector<float> data;
    for (const auto& row : r) data.insert(data.end(), row.begin(), row.end());
    return AttentionMap(r.size(), std::move(data));
}

/// Gaussian rows; with `unit` each row is scaled to norm 1, otherwise each row
/// gets a random scale in [0.1, 10] so norms differ.
inline TokenMatrix random_tokens(std::size_t n, std::size_t d, std::uint64_t seed, bool unit = false) {
    Rng rng(seed);
    std::vector<float> data(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        std::vector<double> row(d);
        for (auto& v : row) {
            v = rng.gaussian();
            sq += v * v;
        }
        const double scale = unit ? 1.0 / std::sqrt(sq) : 0.1 + 9.9 * rng.uniform();
        for (std::size_t j = 0; j < d; ++j) data[i * d + j] = static_cast<float>(row[j] * scale);
    }
    return TokenMatrix(n, d, std::move(data));
}

/// Random row-stochastic map; rows are normalized in double then stored.
inline AttentionMap random_attention(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> w(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        std::vector<double> row(n);
        for (auto& v : row) {
            v = rng.uniform() + 1e-3;
            sum += v;
        }
        for (std::size_t j = 0; j < n; ++j) w[i * n + j] = static_cast<float>(row[j] / sum);
    }
    return AttentionMap(n, std::move(w));
}

inline AttentionMap uniform_attention(std::size_t n) {
    return AttentionMap(n, std::vector<float>(n * n, 1.0f / static_cast<float>(n)));
}

}  // namespace dart::testing
