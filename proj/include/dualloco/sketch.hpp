#pragma once

#include "dualloco/types.hpp"

#include <span>

namespace dualloco {

// Subsampled randomized Hadamard transform acting on row vectors of length
// source_dim: zero-pad to the next power of two, flip signs, apply the
// orthonormal Walsh-Hadamard transform, keep target_dim coordinates, rescale
// by sqrt(source_dim / target_dim) so the sketch is an isometry in
// expectation.
struct SrhtSpec {
    Index source_dim = 0;
    Index target_dim = 0;
    Index padded_dim = 0;
    Vector sign_flips;                  // +-1, length padded_dim
    std::vector<Index> sample_indices;  // target_dim distinct values, ascending
    double scale = 1.0;
};

// In-place orthonormal Walsh-Hadamard transform; length must be a power of
// two (1 is allowed).
void fwht_in_place(std::span<double> values);
void fwht_in_place(Vector& values);

SrhtSpec make_srht(Index source_dim, Index target_dim, std::uint64_t seed);

// Applies the sketch to every row of block (block has source_dim columns);
// returns rows() x target_dim.
Matrix project_block(const Eigen::Ref<const Matrix>& block, const SrhtSpec& spec);

// For V with orthonormal columns (p x r), the spectral norm of
// V^T P P^T V - V^T V where P is the sketch. Measures how far the sketch is
// from an isometry on the column space of V.
double spectral_deviation(const Eigen::Ref<const Matrix>& V, const SrhtSpec& spec);

}  // namespace dualloco
