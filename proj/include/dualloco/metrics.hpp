#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace dualloco {

struct PhaseTimes {
    double projection_seconds = 0.0;
    double communication_seconds = 0.0;
    double solve_seconds = 0.0;
    double total_seconds = 0.0;
};

// Per-run instrumentation. Counters are exact value counts, not estimates;
// bytes assume 8-byte doubles on the wire. MSE fields are filled only when
// the corresponding reference data is available (e.g. param_mse_normalized
// needs a ground-truth coefficient vector).
struct MetricsRecord {
    std::optional<double> train_mse_normalized;
    std::optional<double> test_mse_normalized;
    std::optional<double> param_mse_normalized;
    std::optional<double> train_accuracy;  // classification losses
    std::optional<double> test_accuracy;

    PhaseTimes wall_time;

    std::int64_t feature_values_exchanged = 0;  // entries of the summed random features
    std::int64_t primal_values_returned = 0;    // coefficient entries gathered at the end
    std::int64_t bytes_communicated = 0;
    int exchange_rounds = 0;
    std::int64_t projections_computed = 0;      // number of project_block calls
};

// ||prediction - truth||^2 / ||truth - mean(truth)||^2, i.e. the fraction of
// variance left unexplained. Needs m >= 2; throws std::domain_error when the
// truth has zero variance.
double normalized_mse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

// ||estimate - truth||^2 / ||truth||^2; throws std::domain_error for a zero
// reference vector.
double normalized_param_mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

}  // namespace dualloco
