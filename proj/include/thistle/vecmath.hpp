#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace thistle {

/// Default embedding width (sentence-transformer base models).
inline constexpr std::size_t kDefaultDim = 768;

/// Fixed-length vector of finite 32-bit coordinates.
///
/// Construction validates the invariants (at least one coordinate, all
/// finite), so any Embedding in hand is usable by every metric.
class Embedding {
public:
    explicit Embedding(std::vector<float> values) : values_(std::move(values)) {
        if (values_.empty()) {
            fail(ErrorCode::invalid_argument, "embedding must have at least one coordinate");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                fail(ErrorCode::non_finite,
                     "embedding coordinate " + std::to_string(i) + " is not finite");
            }
        }
    }

    Embedding(std::initializer_list<float> values) : Embedding(std::vector<float>(values)) {}

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    float operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    std::vector<float> values_;
};

enum class Metric : unsigned char { cosine = 0, euclidean = 1 };

constexpr const char* to_string(Metric m) noexcept {
    return m == Metric::cosine ? "cosine" : "euclidean";
}

inline void check_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        fail(ErrorCode::dimension_mismatch,
             "dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

namespace detail {

// Unchecked kernels; callers guarantee equal lengths. Accumulation is 64-bit.

inline double squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum;
}

inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

inline double norm(std::span<const float> a) noexcept { return std::sqrt(dot(a, a)); }

/// 1 - cos from a precomputed dot product and norms; similarity clamped to [-1, 1].
inline double cosine_from(double dot_ab, double norm_a, double norm_b) noexcept {
    const double sim = std::clamp(dot_ab / (norm_a * norm_b), -1.0, 1.0);
    return 1.0 - sim;
}

inline double euclidean(std::span<const float> a, std::span<const float> b) noexcept {
    return std::sqrt(squared_l2(a, b));
}

} // namespace detail

inline double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    check_same_dim(a.size(), b.size());
    return detail::euclidean(a, b);
}

inline double euclidean_distance(const Embedding& a, const Embedding& b) {
    return euclidean_distance(a.values(), b.values());
}

/// Cosine distance in [0, 2]. Zero-norm inputs are rejected: the angle is undefined.
inline double cosine_distance(std::span<const float> a, std::span<const float> b) {
    check_same_dim(a.size(), b.size());
    const double na = detail::norm(a);
    const double nb = detail::norm(b);
    if (na == 0.0 || nb == 0.0) {
        fail(ErrorCode::zero_vector, "cosine distance is undefined for a zero-norm vector");
    }
    return detail::cosine_from(detail::dot(a, b), na, nb);
}

inline double cosine_distance(const Embedding& a, const Embedding& b) {
    return cosine_distance(a.values(), b.values());
}

inline double distance(Metric metric, std::span<const float> a, std::span<const float> b) {
    return metric == Metric::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

inline bool is_zero(std::span<const float> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
}

/// Unit-length copy of `v`; zero vectors are rejected.
inline Embedding normalized(const Embedding& v) {
    const double n = detail::norm(v.values());
    if (n == 0.0) {
        fail(ErrorCode::zero_vector, "cannot normalize a zero-norm vector");
    }
    std::vector<float> out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(v[i]) / n);
    }
    return Embedding(std::move(out));
}

} // namespace thistle
