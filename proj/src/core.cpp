#include "dualloco/types.hpp"

#include "dualloco/partition.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dualloco {

LossFamily make_loss(const std::string& name, double smoothing) {
    LossFamily family;
    if (name == "squared") {
        family.kind = LossKind::squared;
    } else if (name == "logistic") {
        family.kind = LossKind::logistic;
    } else if (name == "hinge") {
        family.kind = LossKind::hinge;
    } else if (name == "smoothed_hinge") {
        family.kind = LossKind::smoothed_hinge;
    } else {
        throw std::invalid_argument("unknown loss family: " + name);
    }
    if (smoothing < 0.0) throw std::invalid_argument("smoothing width must be nonnegative");
    family.smoothing = smoothing;
    return family;
}

std::string loss_name(const LossFamily& family) {
    switch (family.kind) {
        case LossKind::squared: return "squared";
        case LossKind::logistic: return "logistic";
        case LossKind::hinge: return "hinge";
        case LossKind::smoothed_hinge: return "smoothed_hinge";
    }
    throw std::logic_error("unreachable loss kind");
}

ProjectionDim ProjectionDim::count(Index value) {
    ProjectionDim dim;
    dim.is_fraction = false;
    dim.value = static_cast<double>(value);
    return dim;
}

ProjectionDim ProjectionDim::fraction(double value) {
    ProjectionDim dim;
    dim.is_fraction = true;
    dim.value = value;
    return dim;
}

Index ProjectionDim::resolve(Index p, int num_workers) const {
    if (p < 1 || num_workers < 1) throw std::invalid_argument("projection_dim: bad shape");
    if (is_fraction) {
        if (!(value > 0.0) || !(value <= 1.0)) {
            throw std::invalid_argument("projection_dim fraction must lie in (0, 1]");
        }
        const Index largest_block = (p + num_workers - 1) / num_workers;
        const auto scaled = std::llround(value * static_cast<double>(p - largest_block));
        return std::max<Index>(1, static_cast<Index>(scaled));
    }
    if (value < 1.0 || value != std::floor(value)) {
        throw std::invalid_argument("projection_dim must be a positive integer");
    }
    return static_cast<Index>(value);
}

void Dataset::validate() const {
    if (features.rows() < 1 || features.cols() < 1) {
        throw std::invalid_argument("dataset must have at least one row and one column");
    }
    if (labels.size() != features.rows()) {
        throw std::invalid_argument("label count does not match the number of rows");
    }
    if (!features.allFinite() || !labels.allFinite()) {
        throw std::invalid_argument("dataset contains non-finite entries");
    }
}

void Dataset::validate_labels_for(const LossFamily& family) const {
    validate();
    if (!family.is_classification()) return;
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1.0 && labels[i] != -1.0) {
            throw std::invalid_argument("classification labels must be +1 or -1 (row " +
                                        std::to_string(i + 1) + ")");
        }
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return detail::mix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

FeaturePartition partition_features(Index p, int num_blocks, std::uint64_t seed) {
    if (p < 1) throw std::invalid_argument("partition_features: p must be positive");
    if (num_blocks < 1) throw std::invalid_argument("partition_features: need at least one block");
    if (static_cast<Index>(num_blocks) > p) {
        throw std::invalid_argument("partition_features: more blocks than columns");
    }

    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    detail::Rng rng(seed);
    rng.shuffle(order);

    FeaturePartition partition;
    partition.num_features = p;
    partition.blocks.resize(static_cast<std::size_t>(num_blocks));
    const Index base = p / num_blocks;
    const Index remainder = p % num_blocks;
    std::size_t cursor = 0;
    for (int k = 0; k < num_blocks; ++k) {
        const Index size = base + (static_cast<Index>(k) < remainder ? 1 : 0);
        auto& block = partition.blocks[static_cast<std::size_t>(k)];
        block.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                     order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
        std::sort(block.begin(), block.end());
        cursor += static_cast<std::size_t>(size);
    }
    return partition;
}

Matrix slice_columns(const Eigen::Ref<const Matrix>& features, const std::vector<Index>& block) {
    Matrix out(features.rows(), static_cast<Index>(block.size()));
    for (std::size_t j = 0; j < block.size(); ++j) {
        const Index column = block[j];
        if (column < 0 || column >= features.cols()) {
            throw std::invalid_argument("slice_columns: column index out of range");
        }
        out.col(static_cast<Index>(j)) = features.col(column);
    }
    return out;
}

Matrix slice_columns(const Dataset& data, const std::vector<Index>& block) {
    return slice_columns(Eigen::Ref<const Matrix>(data.features), block);
}

}  // namespace dualloco
