#pragma once

#include "dualloco/types.hpp"

namespace dualloco {

// Loss value f(u; y) for a single example with margin u = x^T beta.
double loss_value(const LossFamily& family, double u, double y);

// Fenchel conjugate f*(a; y) in the minimization orientation: the dual
// objective being minimized is sum_i f*(alpha_i) + (1/(2 n lambda)) alpha^T K
// alpha, and beta(alpha) = -(1/(n lambda)) X^T alpha. Throws
// std::domain_error when a is outside the conjugate's domain.
double conjugate_value(const LossFamily& family, double a, double y);

// Exact single-coordinate minimizer of
//   f*(a; y) - a * margin + q/2 * (a - current)^2,  q = row_norm_sq/(n*lambda),
// which is the dual objective restricted to coordinate i with the rest of
// alpha held fixed (margin = x_i^T beta(alpha)). Returns the new coordinate
// value. Closed form for all families except logistic, which uses a
// safeguarded Newton iteration converged to ~1e-12.
double coordinate_update(const LossFamily& family, double current, double y, double margin,
                         double row_norm_sq, Index n, double lambda);

}  // namespace dualloco
