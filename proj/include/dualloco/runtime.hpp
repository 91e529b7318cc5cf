#pragma once

#include "dualloco/solver.hpp"
#include "dualloco/types.hpp"

namespace dualloco {

// One worker's randomized features X_k Pi_k, the only thing it broadcasts.
struct RandomFeatureBlock {
    int worker_id = 0;
    Matrix values;  // n x tau_subs
};

// What worker k solves on: its raw columns next to everyone else's summed
// random features.
struct LocalDesign {
    int worker_id = 0;
    Matrix raw;            // n x tau_k
    Matrix summed_others;  // n x tau_subs (wider in identity mode)

    Matrix combined() const;
    Index design_cols() const noexcept { return raw.cols() + summed_others.cols(); }
};

// Sums the blocks pairwise along a fixed binary tree over worker indices
// (the reduction order is independent of scheduling, so the result is
// bit-reproducible). All blocks must share one shape.
Matrix tree_sum(const std::vector<RandomFeatureBlock>& blocks);

LocalDesign build_local_design(const Eigen::Ref<const Matrix>& own_block,
                               const RandomFeatureBlock& own_rf,
                               const Eigen::Ref<const Matrix>& total_sum);

// One-round distributed fit: partition columns, project each block, exchange
// the sums (single logical round), solve each local dual concurrently, map
// back to primal coordinates through the raw columns only, and reassemble.
PrimalSolution fit(const Dataset& data, const FitConfig& config);

struct CvCell {
    double mse = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
};

struct CvResult {
    double best_lambda = 0.0;
    std::size_t best_index = 0;
    std::vector<double> lambdas;
    std::vector<double> mean_mse;              // per lambda, over valid folds
    std::vector<std::vector<CvCell>> cells;    // [lambda][fold]
    std::vector<std::string> warnings;
    std::int64_t projections_computed = 0;
};

// v-fold cross-validation over a lambda grid. Projections and the exchange
// happen once per fold and are reused across the whole grid; test
// predictions are assembled blockwise from the per-worker coefficients. A
// (fold, lambda) cell whose solve fails is dropped with a warning; a lambda
// with no surviving fold aborts the run.
CvResult cross_validate(const Dataset& data, const FitConfig& config,
                        const std::vector<double>& lambdas, int folds, std::uint64_t cv_seed);

Vector predict(const PrimalSolution& solution, const Eigen::Ref<const Matrix>& X_new);

// Sign-thresholded predictions for classification (sign(0) reported as +1).
Vector predict_labels(const PrimalSolution& solution, const Eigen::Ref<const Matrix>& X_new);

struct ErrorBound {
    double rho = 0.0;                // per-worker deviation bound
    double epsilon = 0.0;            // sqrt(K) * rho
    double global_bound_factor = 0;  // epsilon/(1-epsilon), +inf out of regime
    bool in_regime = false;          // epsilon < 1
};

// rho = sqrt(c0 * log(2 r / delta) * r / tau_subs); the relative-error factor
// epsilon/(1-epsilon) is only meaningful while epsilon < 1, otherwise the
// bound is vacuous and reported as +inf.
ErrorBound theoretical_error_bound(Index r, Index tau_subs, double delta, double c0, int K);

// Number of singular values above rel_tol times the largest one.
Index numerical_rank(const Eigen::Ref<const Matrix>& X, double rel_tol = 1e-10);

}  // namespace dualloco
