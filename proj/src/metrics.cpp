#include "dualloco/metrics.hpp"

#include <stdexcept>

namespace dualloco {

double normalized_mse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("normalized_mse: length mismatch");
    }
    if (truth.size() < 2) {
        throw std::invalid_argument("normalized_mse: need at least two samples");
    }
    const double mean = truth.mean();
    const double spread = (truth.array() - mean).matrix().squaredNorm();
    if (spread <= 0.0) {
        throw std::domain_error("normalized_mse: truth has zero variance");
    }
    return (predictions - truth).squaredNorm() / spread;
}

double normalized_param_mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
    if (estimate.size() != truth.size()) {
        throw std::invalid_argument("normalized_param_mse: length mismatch");
    }
    const double reference = truth.squaredNorm();
    if (reference <= 0.0) {
        throw std::domain_error("normalized_param_mse: zero reference vector");
    }
    return (estimate - truth).squaredNorm() / reference;
}

}  // namespace dualloco
