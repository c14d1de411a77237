// Canonical accumulation order.
//
// Every reduction over an embedding row uses eight double-precision lanes:
// lane l accumulates elements l, l+8, l+16, ... in increasing order, and the
// lanes are combined as ((l0+l1)+(l2+l3)) + ((l4+l5)+(l6+l7)). Fixing the order
// keeps results bit-identical between the optimized path and the test oracles
// while still letting the compiler vectorize the lanes.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstring>
#include <span>

// Hot loops get an AVX2 clone picked at load time. Results do not change:
// the lane order is explicit and contraction into FMA is disabled in the build.
#if defined(__x86_64__) && defined(__GNUC__) && defined(__linux__)
#define DART_MULTIVERSION __attribute__((target_clones("avx2", "default")))
#else
#define DART_MULTIVERSION
#endif

namespace dart::numeric {

inline constexpr std::size_t kLanes = 8;

inline double combine_lanes(const double (&acc)[kLanes]) noexcept {
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double acc[kLanes] = {};
    const std::size_t d = a.size();
    const std::size_t full = d - d % kLanes;
    for (std::size_t j = 0; j < full; j += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            acc[l] += static_cast<double>(a[j + l]) * static_cast<double>(b[j + l]);
        }
    }
    for (std::size_t j = full; j < d; ++j) {
        acc[j - full] += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    }
    return combine_lanes(acc);
}

inline double squared_norm(std::span<const float> a) noexcept { return dot(a, a); }

/// out[r] = dot(x, rows[r]) for R rows of x.size() floats, in one pass over x.
/// Each result is bit-identical to dot(); only the loop nesting differs.
template <std::size_t R>
inline void dot_rows(std::span<const float> x, const float* const (&rows)[R], double (&out)[R]) noexcept {
    double acc[R][kLanes] = {};
    const std::size_t d = x.size();
    const std::size_t full = d - d % kLanes;
    const float* xp = x.data();
#if defined(__GNUC__)
    // Lanes 0-3 and 4-7 as two 4-wide vectors; element l is still lane l.
    typedef float f4 __attribute__((vector_size(16), aligned(4)));
    typedef double d4 __attribute__((vector_size(32)));
    d4 lo[R] = {};
    d4 hi[R] = {};
    for (std::size_t j = 0; j < full; j += kLanes) {
        f4 xa;
        f4 xb;
        std::memcpy(&xa, xp + j, sizeof xa);
        std::memcpy(&xb, xp + j + 4, sizeof xb);
        const d4 xlo = __builtin_convertvector(xa, d4);
        const d4 xhi = __builtin_convertvector(xb, d4);
        for (std::size_t r = 0; r < R; ++r) {
            f4 ra;
            f4 rb;
            std::memcpy(&ra, rows[r] + j, sizeof ra);
            std::memcpy(&rb, rows[r] + j + 4, sizeof rb);
            lo[r] += xlo * __builtin_convertvector(ra, d4);
            hi[r] += xhi * __builtin_convertvector(rb, d4);
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t l = 0; l < 4; ++l) {
            acc[r][l] = lo[r][l];
            acc[r][l + 4] = hi[r][l];
        }
    }
#else
    for (std::size_t j = 0; j < full; j += kLanes) {
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t l = 0; l < kLanes; ++l) {
                acc[r][l] += static_cast<double>(xp[j + l]) * static_cast<double>(rows[r][j + l]);
            }
        }
    }
#endif
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = full; j < d; ++j) {
            acc[r][j - full] += static_cast<double>(xp[j]) * static_cast<double>(rows[r][j]);
        }
        out[r] = combine_lanes(acc[r]);
    }
}

inline double squared_distance(std::span<const float> a, std::span<const float> b) noexcept {
    double acc[kLanes] = {};
    const std::size_t d = a.size();
    const std::size_t full = d - d % kLanes;
    for (std::size_t j = 0; j < full; j += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            const double diff = static_cast<double>(a[j + l]) - static_cast<double>(b[j + l]);
            acc[l] += diff * diff;
        }
    }
    for (std::size_t j = full; j < d; ++j) {
        const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        acc[j - full] += diff * diff;
    }
    return combine_lanes(acc);
}

inline double abs_sum(std::span<const float> a) noexcept {
    double acc[kLanes] = {};
    const std::size_t d = a.size();
    const std::size_t full = d - d % kLanes;
    for (std::size_t j = 0; j < full; j += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            acc[l] += std::fabs(static_cast<double>(a[j + l]));
        }
    }
    for (std::size_t j = full; j < d; ++j) {
        acc[j - full] += std::fabs(static_cast<double>(a[j]));
    }
    return combine_lanes(acc);
}

inline constexpr double kZeroNorm = 1e-12;

/// Cosine similarity from a precomputed dot product and squared norms; zero
/// when either norm is below kZeroNorm.
inline double cosine_from_parts(double dot_ab, double sq_a, double sq_b) noexcept {
    const double na = std::sqrt(sq_a);
    const double nb = std::sqrt(sq_b);
    if (na < kZeroNorm || nb < kZeroNorm) return 0.0;
    return dot_ab / (na * nb);
}

}  // namespace dart::numeric
