#include "dualloco/sketch.hpp"

#include "doctest.h"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <bit>
#include <set>

using namespace dualloco;

namespace {

// Naive orthonormal Hadamard matrix: H(i,j) = (-1)^popcount(i & j) / sqrt(n).
Matrix hadamard(Index n) {
    Matrix H(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            H(i, j) = (std::popcount(static_cast<std::uint64_t>(i) &
                                     static_cast<std::uint64_t>(j)) %
                               2 ==
                       0)
                          ? 1.0
                          : -1.0;
    return H / std::sqrt(static_cast<double>(n));
}

// Dense materialization of the sketch: pad, flip, rotate, subsample, rescale.
Matrix dense_projection(const SrhtSpec& spec) {
    const Matrix H = hadamard(spec.padded_dim);
    Matrix P(spec.source_dim, spec.target_dim);
    for (Index j = 0; j < spec.target_dim; ++j) {
        const Index sampled = spec.sample_indices[static_cast<std::size_t>(j)];
        for (Index i = 0; i < spec.source_dim; ++i) {
            P(i, j) = spec.scale * spec.sign_flips[i] * H(i, sampled);
        }
    }
    return P;
}

}  // namespace

TEST_CASE("fwht matches the dense Hadamard matrix") {
    std::mt19937_64 rng(11);
    for (Index n : {1, 2, 8, 32}) {
        Vector x = testsupport::gaussian_vector(rng, n);
        Vector transformed = x;
        fwht_in_place(transformed);
        const Vector expected = hadamard(n) * x;
        CHECK((transformed - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("fwht is an orthonormal involution") {
    std::mt19937_64 rng(12);
    Vector x = testsupport::gaussian_vector(rng, 64);
    Vector twice = x;
    fwht_in_place(twice);
    const double norm_after = twice.norm();
    fwht_in_place(twice);
    CHECK(norm_after == doctest::Approx(x.norm()).epsilon(1e-12));
    CHECK((twice - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fwht rejects non-power-of-two lengths") {
    Vector x = Vector::Zero(3);
    CHECK_THROWS_AS(fwht_in_place(x), std::invalid_argument);
    Vector empty;
    CHECK_THROWS_AS(fwht_in_place(empty), std::invalid_argument);
}

TEST_CASE("make_srht builds a valid spec") {
    const auto spec = make_srht(48, 13, 77);
    CHECK(spec.source_dim == 48);
    CHECK(spec.target_dim == 13);
    CHECK(spec.padded_dim == 64);
    CHECK(spec.scale == doctest::Approx(std::sqrt(48.0 / 13.0)));
    CHECK(spec.sign_flips.size() == 64);
    for (Index i = 0; i < spec.padded_dim; ++i) {
        CHECK(std::abs(spec.sign_flips[i]) == 1.0);
    }
    REQUIRE(spec.sample_indices.size() == 13);
    std::set<Index> distinct(spec.sample_indices.begin(), spec.sample_indices.end());
    CHECK(distinct.size() == 13);
    CHECK(std::is_sorted(spec.sample_indices.begin(), spec.sample_indices.end()));
    CHECK(*distinct.begin() >= 0);
    CHECK(*distinct.rbegin() < 64);
}

TEST_CASE("make_srht rejects impossible shapes") {
    CHECK_THROWS_AS(make_srht(0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_srht(8, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_srht(8, 9, 0), std::invalid_argument);
    // Padding buys headroom: 48 columns pad to 64, so 60 targets are legal.
    CHECK_NOTHROW(make_srht(48, 60, 0));
    CHECK_THROWS_AS(make_srht(48, 65, 0), std::invalid_argument);
}

TEST_CASE("make_srht is seed-deterministic and seed-sensitive") {
    const auto a = make_srht(32, 8, 5);
    const auto b = make_srht(32, 8, 5);
    const auto c = make_srht(32, 8, 6);
    CHECK((a.sign_flips - b.sign_flips).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.sample_indices == b.sample_indices);
    const bool differs = (a.sign_flips - c.sign_flips).cwiseAbs().maxCoeff() != 0.0 ||
                         a.sample_indices != c.sample_indices;
    CHECK(differs);
}

TEST_CASE("project_block equals the dense projection matrix") {
    std::mt19937_64 rng(13);
    for (auto [source, target] : {std::pair<Index, Index>{16, 5}, {24, 10}, {32, 32}}) {
        const auto spec = make_srht(source, target, 99);
        const Matrix block = testsupport::gaussian_matrix(rng, 7, source);
        const Matrix fast = project_block(block, spec);
        const Matrix dense = block * dense_projection(spec);
        CHECK((fast - dense).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("project_block checks the column count") {
    const auto spec = make_srht(16, 4, 0);
    const Matrix wrong = Matrix::Zero(3, 15);
    CHECK_THROWS_AS(project_block(wrong, spec), std::invalid_argument);
}

TEST_CASE("sketch is an isometry in expectation on power-of-two blocks") {
    std::mt19937_64 rng(14);
    Vector x = testsupport::gaussian_vector(rng, 64);
    const double target = x.squaredNorm();
    double mean = 0.0;
    const int trials = 400;
    for (int s = 0; s < trials; ++s) {
        const auto spec = make_srht(64, 16, static_cast<std::uint64_t>(s));
        mean += project_block(x.transpose(), spec).squaredNorm();
    }
    mean /= trials;
    CHECK(mean == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("full-width sketch of a power-of-two block is exactly orthogonal") {
    std::mt19937_64 rng(15);
    const auto spec = make_srht(32, 32, 3);
    const Matrix block = testsupport::gaussian_matrix(rng, 6, 32);
    const Matrix rotated = project_block(block, spec);
    const Matrix gram_in = block * block.transpose();
    const Matrix gram_out = rotated * rotated.transpose();
    CHECK((gram_in - gram_out).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("spectral_deviation matches a direct eigenvalue computation") {
    std::mt19937_64 rng(16);
    const Matrix raw = testsupport::gaussian_matrix(rng, 64, 6);
    const Matrix V = Eigen::HouseholderQR<Matrix>(raw).householderQ() * Matrix::Identity(64, 6);
    const auto spec = make_srht(64, 24, 21);
    const Matrix W = project_block(V.transpose(), spec);
    const Matrix deviation = W * W.transpose() - Matrix::Identity(6, 6);
    Eigen::SelfAdjointEigenSolver<Matrix> eigen(deviation, Eigen::EigenvaluesOnly);
    const double expected = eigen.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(spectral_deviation(V, spec) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(spectral_deviation(V, spec) < 1.0);
}

TEST_CASE("spectral_deviation rejects non-orthonormal input") {
    std::mt19937_64 rng(17);
    const Matrix skewed = testsupport::gaussian_matrix(rng, 64, 6);
    const auto spec = make_srht(64, 24, 21);
    CHECK_THROWS_AS(spectral_deviation(skewed, spec), std::invalid_argument);
    const Matrix wide = testsupport::gaussian_matrix(rng, 6, 64);
    CHECK_THROWS_AS(spectral_deviation(wide, spec), std::invalid_argument);
}
