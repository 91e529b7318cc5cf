#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualloco/metrics.hpp"

namespace dualloco {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when an input file cannot be parsed; carries the offending line.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, long line)
        : std::runtime_error(std::move(message) + " (line " + std::to_string(line) + ")"),
          line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

// Thrown when a local solver fails to reach the requested duality gap.
// worker is -1 when the failure is not attributable to a specific worker.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(std::string message, double last_gap, int worker = -1)
        : std::runtime_error(std::move(message)), last_gap_(last_gap), worker_(worker) {}
    double last_gap() const noexcept { return last_gap_; }
    int worker() const noexcept { return worker_; }

private:
    double last_gap_;
    int worker_;
};

enum class LossKind { squared, logistic, hinge, smoothed_hinge };

struct LossFamily {
    LossKind kind = LossKind::squared;
    // Width of the quadratic region for smoothed_hinge; ignored otherwise.
    double smoothing = 1.0;

    bool is_classification() const noexcept { return kind != LossKind::squared; }
    bool is_smooth() const noexcept { return kind != LossKind::hinge; }
};

LossFamily make_loss(const std::string& name, double smoothing = 1.0);
std::string loss_name(const LossFamily& family);

enum class ProjectionKind { srht, identity };

struct SolverOptions {
    double gap_tolerance = 1e-8;
    int max_epochs = 1000;
};

// Target dimension of the per-worker random projection: either an absolute
// column count or a fraction of the foreign coordinates (p minus the largest
// block size), resolved once the dataset shape is known.
struct ProjectionDim {
    static ProjectionDim count(Index value);
    static ProjectionDim fraction(double value);

    // Smallest block size in a balanced partition is floor(p/K); the fraction
    // is taken of p - ceil(p/K) and clamped to at least one column.
    Index resolve(Index p, int num_workers) const;

    bool is_fraction = false;
    double value = 1.0;
};

struct FitConfig {
    double lambda = 1.0;
    int num_workers = 1;
    ProjectionDim projection_dim = ProjectionDim::count(1);
    LossFamily loss;
    SolverOptions solver;
    std::uint64_t seed = 0;
    ProjectionKind projection = ProjectionKind::srht;
};

struct Dataset {
    Matrix features;  // n x p
    Vector labels;    // n

    Index num_rows() const noexcept { return features.rows(); }
    Index num_cols() const noexcept { return features.cols(); }

    // Shape/finiteness checks; classification additionally requires +-1 labels.
    void validate() const;
    void validate_labels_for(const LossFamily& family) const;
};

// Disjoint feature blocks covering 0..p-1 (column indices are 0-based).
struct FeaturePartition {
    std::vector<std::vector<Index>> blocks;
    Index num_features = 0;

    int num_blocks() const noexcept { return static_cast<int>(blocks.size()); }
};

struct PrimalSolution {
    Vector coefficients;  // length p, original column order
    FitConfig config;
    std::optional<MetricsRecord> metrics;
};

// Deterministic per-worker / per-fold substream derivation (splitmix64 chain).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace dualloco
