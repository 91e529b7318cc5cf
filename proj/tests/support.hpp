#pragma once

#include "dualloco/types.hpp"

#include <Eigen/Cholesky>

#include <random>

namespace testsupport {

using dualloco::Dataset;
using dualloco::Index;
using dualloco::Matrix;
using dualloco::Vector;

inline Matrix gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> normal;
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
    return out;
}

inline Vector gaussian_vector(std::mt19937_64& rng, Index size) {
    std::normal_distribution<double> normal;
    Vector out(size);
    for (Index i = 0; i < size; ++i) out(i) = normal(rng);
    return out;
}

// Independent ridge oracle: dense normal equations, no shared code with the
// library's solvers.
inline Vector ridge_closed_form(const Matrix& X, const Vector& y, double lambda) {
    const auto n = static_cast<double>(X.rows());
    Matrix gram = X.transpose() * X;
    gram.diagonal().array() += n * lambda;
    return gram.ldlt().solve(X.transpose() * y);
}

// Dense regression data: X with N(0, 1/p) entries, unit-norm signal, optional
// relative noise. Returns the signal through *signal_out when requested.
inline Dataset regression_data(std::uint64_t seed, Index n, Index p, double noise = 0.1,
                               Vector* signal_out = nullptr) {
    std::mt19937_64 rng(seed);
    Dataset data;
    data.features = gaussian_matrix(rng, n, p) / std::sqrt(static_cast<double>(p));
    Vector signal = gaussian_vector(rng, p);
    signal /= signal.norm();
    Vector clean = data.features * signal;
    data.labels = clean;
    if (noise > 0.0) {
        const double scale = noise * std::sqrt(clean.squaredNorm() / static_cast<double>(n));
        data.labels += scale * gaussian_vector(rng, n);
    }
    if (signal_out != nullptr) *signal_out = signal;
    return data;
}

// Rank-r factor model U * V scaled so the Gram matrix is comparable to the
// n*lambda damping used in the sketching experiments.
inline Dataset low_rank_data(std::uint64_t seed, Index n, Index p, Index r, double factor_scale,
                             double noise, Vector* signal_out = nullptr) {
    std::mt19937_64 rng(seed);
    Dataset data;
    Matrix factors_left = gaussian_matrix(rng, n, r);
    Matrix factors_right = gaussian_matrix(rng, r, p);
    data.features = (factor_scale / std::sqrt(static_cast<double>(p))) *
                    (factors_left * factors_right);
    Vector signal = gaussian_vector(rng, p);
    signal /= signal.norm();
    Vector clean = data.features * signal;
    data.labels = clean;
    if (noise > 0.0) {
        const double scale = noise * std::sqrt(clean.squaredNorm() / static_cast<double>(n));
        data.labels += scale * gaussian_vector(rng, n);
    }
    if (signal_out != nullptr) *signal_out = signal;
    return data;
}

// Linearly separable +-1 labels from a random unit-norm separator.
inline Dataset separable_data(std::uint64_t seed, Index n, Index p, Vector* separator_out = nullptr) {
    std::mt19937_64 rng(seed);
    Vector separator = gaussian_vector(rng, p);
    separator /= separator.norm();
    Dataset data;
    data.features = gaussian_matrix(rng, n, p) / std::sqrt(static_cast<double>(p));
    data.labels = Vector(n);
    for (Index i = 0; i < n; ++i) {
        const double margin = data.features.row(i).dot(separator);
        data.labels(i) = margin >= 0.0 ? 1.0 : -1.0;
    }
    if (separator_out != nullptr) *separator_out = separator;
    return data;
}

inline double relative_error(const Vector& estimate, const Vector& truth) {
    return (estimate - truth).norm() / truth.norm();
}

}  // namespace testsupport
