#pragma once

#include "dualloco/types.hpp"

#include <utility>

namespace dualloco {

// Dual iterate plus the cached primal vector beta(alpha) =
// -(1/(n lambda)) design^T alpha, maintained incrementally by the solver.
struct DualState {
    Vector alpha;         // length n
    Vector primal_cache;  // length = design columns
    int epoch = 0;
    double gap = std::numeric_limits<double>::infinity();
};

struct SolveReport {
    int epochs_run = 0;
    double final_gap = std::numeric_limits<double>::infinity();
    double primal_objective = 0.0;
    double dual_objective = 0.0;  // lower bound on the primal optimum
    bool converged = false;
    std::vector<double> gap_history;  // one entry per completed epoch
};

// Stochastic dual coordinate ascent on
//   min_beta (1/n) sum_i f(x_i^T beta; y_i) + lambda/2 ||beta||^2
// over the given design. One epoch = one pass over a fresh random permutation
// of the rows; the duality gap is evaluated after every epoch and the solver
// stops once it reaches tolerance. Deterministic for a given seed.
std::pair<DualState, SolveReport> local_dual_solve(const Eigen::Ref<const Matrix>& design,
                                                   const Vector& labels,
                                                   const LossFamily& family, double lambda,
                                                   double tolerance, int max_epochs,
                                                   std::uint64_t seed);

// (1/n) sum_i [ f(u_i) + f*(alpha_i) - u_i alpha_i ] with u = design *
// primal_cache; every summand is nonnegative by the Fenchel-Young inequality.
// Verifies the cache-coherence invariant first and throws std::logic_error if
// the cache has drifted from -(1/(n lambda)) design^T alpha.
double duality_gap(const Eigen::Ref<const Matrix>& design, const Vector& labels,
                   const LossFamily& family, double lambda, const DualState& state);

// Reference solution on the full dataset: closed form for squared loss
// (normal equations through whichever Gram matrix is smaller), dual
// coordinate ascent with a fixed internal seed otherwise. Throws
// ConvergenceError if the iterative path stalls above tolerance.
PrimalSolution exact_solve(const Dataset& data, const LossFamily& family, double lambda,
                           double tolerance = 1e-10, int max_epochs = 100000);

}  // namespace dualloco
