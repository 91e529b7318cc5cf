#include "dualloco/solver.hpp"

#include "dualloco/losses.hpp"
#include "format.hpp"
#include "rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dualloco {
namespace {

// Row-major copy so the inner coordinate loop touches contiguous memory.
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Objectives {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

// The gap is accumulated termwise as f(u_i) + f*(alpha_i) - u_i alpha_i, each
// summand nonnegative by Fenchel-Young; this stays accurate when primal and
// dual are large and nearly equal.
Objectives evaluate_objectives(const Eigen::Ref<const Matrix>& design, const Vector& labels,
                               const LossFamily& family, double lambda, const Vector& alpha,
                               const Vector& cache) {
    const Index n = design.rows();
    const Vector margins = design * cache;
    double loss_sum = 0.0;
    double conjugate_sum = 0.0;
    double gap_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double f = loss_value(family, margins[i], labels[i]);
        const double fstar = conjugate_value(family, alpha[i], labels[i]);
        loss_sum += f;
        conjugate_sum += fstar;
        gap_sum += std::max(0.0, f + fstar - margins[i] * alpha[i]);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double regularizer = 0.5 * lambda * cache.squaredNorm();
    Objectives out;
    out.primal = loss_sum * inv_n + regularizer;
    out.dual = -conjugate_sum * inv_n - regularizer;
    out.gap = gap_sum * inv_n;
    return out;
}

void validate_solver_inputs(const Eigen::Ref<const Matrix>& design, const Vector& labels,
                            const LossFamily& family, double lambda, double tolerance,
                            int max_epochs) {
    if (design.rows() < 1 || design.cols() < 1) {
        throw std::invalid_argument("solver: design must be nonempty");
    }
    if (labels.size() != design.rows()) {
        throw std::invalid_argument("solver: label count does not match design rows");
    }
    if (!(lambda > 0.0)) throw std::invalid_argument("solver: lambda must be positive");
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be positive");
    if (max_epochs < 1) throw std::invalid_argument("solver: max_epochs must be at least 1");
    if (!design.allFinite() || !labels.allFinite()) {
        throw std::invalid_argument("solver: non-finite inputs");
    }
    if (family.is_classification()) {
        for (Index i = 0; i < labels.size(); ++i) {
            if (labels[i] != 1.0 && labels[i] != -1.0) {
                throw std::invalid_argument("solver: classification labels must be +1 or -1");
            }
        }
    }
}

}  // namespace

std::pair<DualState, SolveReport> local_dual_solve(const Eigen::Ref<const Matrix>& design,
                                                   const Vector& labels, const LossFamily& family,
                                                   double lambda, double tolerance, int max_epochs,
                                                   std::uint64_t seed) {
    validate_solver_inputs(design, labels, family, lambda, tolerance, max_epochs);
    const Index n = design.rows();
    const Index d = design.cols();
    const RowMajorMatrix X = design;
    Vector row_norm_sq(n);
    for (Index i = 0; i < n; ++i) row_norm_sq[i] = X.row(i).squaredNorm();

    DualState state;
    state.alpha = Vector::Zero(n);
    state.primal_cache = Vector::Zero(d);
    SolveReport report;
    report.gap_history.reserve(std::min(max_epochs, 4096));

    const double inv_nlambda = 1.0 / (static_cast<double>(n) * lambda);
    detail::Rng rng(seed);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});

    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        rng.shuffle(order);
        for (const Index i : order) {
            const double margin = X.row(i).dot(state.primal_cache);
            const double updated =
                coordinate_update(family, state.alpha[i], labels[i], margin, row_norm_sq[i], n,
                                  lambda);
            const double delta = updated - state.alpha[i];
            if (delta != 0.0) {
                state.primal_cache.noalias() -= (delta * inv_nlambda) * X.row(i).transpose();
                state.alpha[i] = updated;
            }
        }
        // Occasionally rebuild the cache from scratch so incremental rounding
        // cannot accumulate over long runs.
        if (epoch % 64 == 0) {
            state.primal_cache.noalias() = -inv_nlambda * (X.transpose() * state.alpha);
        }
        const Objectives objectives =
            evaluate_objectives(design, labels, family, lambda, state.alpha, state.primal_cache);
        state.epoch = epoch;
        state.gap = objectives.gap;
        report.primal_objective = objectives.primal;
        report.dual_objective = objectives.dual;
        report.gap_history.push_back(objectives.gap);
        if (objectives.gap <= tolerance) {
            report.converged = true;
            break;
        }
    }
    report.epochs_run = state.epoch;
    report.final_gap = state.gap;
    return {std::move(state), std::move(report)};
}

double duality_gap(const Eigen::Ref<const Matrix>& design, const Vector& labels,
                   const LossFamily& family, double lambda, const DualState& state) {
    if (labels.size() != design.rows()) {
        throw std::invalid_argument("duality_gap: label count does not match design rows");
    }
    if (state.alpha.size() != design.rows() || state.primal_cache.size() != design.cols()) {
        throw std::invalid_argument("duality_gap: state shape does not match design");
    }
    if (!(lambda > 0.0)) throw std::invalid_argument("duality_gap: lambda must be positive");

    const double inv_nlambda = 1.0 / (static_cast<double>(design.rows()) * lambda);
    const Vector reference = -inv_nlambda * (design.transpose() * state.alpha);
    const double drift = (state.primal_cache - reference).norm();
    if (drift > 1e-8 * std::max(1.0, reference.norm())) {
        throw std::logic_error("duality_gap: primal cache is out of sync with alpha");
    }
    return evaluate_objectives(design, labels, family, lambda, state.alpha, state.primal_cache)
        .gap;
}

PrimalSolution exact_solve(const Dataset& data, const LossFamily& family, double lambda,
                           double tolerance, int max_epochs) {
    data.validate_labels_for(family);
    if (!(lambda > 0.0)) throw std::invalid_argument("exact_solve: lambda must be positive");
    const Index n = data.num_rows();
    const Index p = data.num_cols();
    const double n_lambda = static_cast<double>(n) * lambda;

    PrimalSolution solution;
    solution.config.lambda = lambda;
    solution.config.num_workers = 1;
    solution.config.loss = family;
    solution.config.solver.gap_tolerance = tolerance;
    solution.config.solver.max_epochs = max_epochs;

    if (family.kind == LossKind::squared) {
        const Matrix& X = data.features;
        if (p <= n) {
            Matrix gram = X.transpose() * X;
            gram.diagonal().array() += n_lambda;
            solution.coefficients = Eigen::LLT<Matrix>(gram).solve(X.transpose() * data.labels);
        } else {
            // Dual route: beta = X^T (X X^T + n lambda I)^{-1} y.
            Matrix gram = X * X.transpose();
            gram.diagonal().array() += n_lambda;
            solution.coefficients = X.transpose() * Eigen::LLT<Matrix>(gram).solve(data.labels);
        }
        return solution;
    }

    constexpr std::uint64_t kReferenceSeed = 0x5eedc0ffee15c001ull;
    auto [state, report] = local_dual_solve(data.features, data.labels, family, lambda, tolerance,
                                            max_epochs, kReferenceSeed);
    if (!report.converged) {
        throw ConvergenceError("exact_solve: duality gap " +
                                   detail::format_scientific(report.final_gap) +
                                   " above tolerance after " + std::to_string(report.epochs_run) +
                                   " epochs",
                               report.final_gap);
    }
    solution.coefficients = std::move(state.primal_cache);
    return solution;
}

}  // namespace dualloco
