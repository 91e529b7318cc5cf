#include "dualloco/sketch.hpp"

#include "rng.hpp"

#include <Eigen/Eigenvalues>

#include <bit>
#include <cmath>

namespace dualloco {

void fwht_in_place(std::span<double> values) {
    const std::size_t len = values.size();
    if (len == 0 || !std::has_single_bit(len)) {
        throw std::invalid_argument("fwht_in_place: length must be a power of two");
    }
    for (std::size_t half = 1; half < len; half <<= 1) {
        for (std::size_t start = 0; start < len; start += half << 1) {
            for (std::size_t j = start; j < start + half; ++j) {
                const double a = values[j];
                const double b = values[j + half];
                values[j] = a + b;
                values[j + half] = a - b;
            }
        }
    }
    // One global factor instead of 1/sqrt(2) per butterfly stage.
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    for (double& v : values) v *= scale;
}

void fwht_in_place(Vector& values) {
    fwht_in_place(std::span<double>(values.data(), static_cast<std::size_t>(values.size())));
}

SrhtSpec make_srht(Index source_dim, Index target_dim, std::uint64_t seed) {
    if (source_dim < 1) throw std::invalid_argument("make_srht: source_dim must be positive");
    if (target_dim < 1) throw std::invalid_argument("make_srht: target_dim must be positive");
    SrhtSpec spec;
    spec.source_dim = source_dim;
    spec.target_dim = target_dim;
    spec.padded_dim =
        static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(source_dim)));
    if (target_dim > spec.padded_dim) {
        throw std::invalid_argument(
            "make_srht: target_dim exceeds the padded transform length");
    }

    detail::Rng rng(seed);
    spec.sign_flips.resize(spec.padded_dim);
    for (Index i = 0; i < spec.padded_dim; ++i) spec.sign_flips[i] = rng.coin() ? 1.0 : -1.0;
    const auto sampled = rng.sample_without_replacement(
        static_cast<std::uint64_t>(spec.padded_dim), static_cast<std::size_t>(target_dim));
    spec.sample_indices.assign(sampled.begin(), sampled.end());
    // True source dimension in the numerator even when padding widened the
    // transform; this keeps scale^2 * target_dim == source_dim exact.
    spec.scale = std::sqrt(static_cast<double>(source_dim) / static_cast<double>(target_dim));
    return spec;
}

Matrix project_block(const Eigen::Ref<const Matrix>& block, const SrhtSpec& spec) {
    if (block.cols() != spec.source_dim) {
        throw std::invalid_argument("project_block: column count does not match spec");
    }
    const Index rows = block.rows();
    Matrix out(rows, spec.target_dim);
    Vector buffer(spec.padded_dim);
    for (Index i = 0; i < rows; ++i) {
        buffer.setZero();
        buffer.head(spec.source_dim) =
            block.row(i).transpose().cwiseProduct(spec.sign_flips.head(spec.source_dim));
        fwht_in_place(buffer);
        for (Index j = 0; j < spec.target_dim; ++j) {
            out(i, j) = spec.scale * buffer[spec.sample_indices[static_cast<std::size_t>(j)]];
        }
    }
    return out;
}

double spectral_deviation(const Eigen::Ref<const Matrix>& V, const SrhtSpec& spec) {
    if (V.rows() != spec.source_dim) {
        throw std::invalid_argument("spectral_deviation: row count does not match spec");
    }
    if (V.cols() < 1 || V.cols() > V.rows()) {
        throw std::invalid_argument("spectral_deviation: need a tall orthonormal matrix");
    }
    const Matrix gram = V.transpose() * V;
    const Matrix identity = Matrix::Identity(V.cols(), V.cols());
    if ((gram - identity).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("spectral_deviation: columns are not orthonormal");
    }
    // Rows of V^T are the columns of V; sketch them and compare Gram matrices.
    const Matrix sketched = project_block(V.transpose(), spec);
    const Matrix deviation = sketched * sketched.transpose() - gram;
    Eigen::SelfAdjointEigenSolver<Matrix> eigen(deviation, Eigen::EigenvaluesOnly);
    return eigen.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace dualloco
