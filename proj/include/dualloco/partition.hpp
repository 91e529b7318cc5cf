#pragma once

#include "dualloco/types.hpp"

namespace dualloco {

// Random balanced partition of columns 0..p-1 into num_blocks blocks.
// Block sizes differ by at most one; indices inside a block are ascending.
// Deterministic for a given (p, num_blocks, seed).
FeaturePartition partition_features(Index p, int num_blocks, std::uint64_t seed);

// Copies the listed columns (in the given order) into a new matrix.
Matrix slice_columns(const Eigen::Ref<const Matrix>& features, const std::vector<Index>& block);
Matrix slice_columns(const Dataset& data, const std::vector<Index>& block);

}  // namespace dualloco
