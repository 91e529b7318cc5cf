#include "dualloco/runtime.hpp"

#include "dualloco/losses.hpp"
#include "dualloco/metrics.hpp"
#include "dualloco/partition.hpp"
#include "dualloco/sketch.hpp"
#include "format.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>

namespace dualloco {
namespace {

// Substream tags, so partition, projection, solver, and fold randomness never
// collide even though they all derive from the one run seed.
constexpr std::uint64_t kPartitionStream = 1;
constexpr std::uint64_t kProjectionStream = 2;
constexpr std::uint64_t kSolverStream = 3;
constexpr std::uint64_t kFoldStream = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct FitPlan {
    FeaturePartition partition;
    Index tau_subs = 0;
    std::vector<bool> fallback;  // per worker: use raw foreign columns
    bool any_sketch_user = false;
};

// Shared validation/resolution for fit and cross_validate. A worker falls
// back to lossless identity exchange when the sketch cannot compress
// (tau_subs >= p - tau_k) or when the config forces identity mode.
FitPlan plan_fit(Index p, const FitConfig& config) {
    if (config.num_workers < 1) {
        throw std::invalid_argument("fit: num_workers must be at least 1");
    }
    if (!(config.lambda > 0.0) || !std::isfinite(config.lambda)) {
        throw std::invalid_argument("fit: lambda must be positive and finite");
    }
    if (!(config.solver.gap_tolerance > 0.0)) {
        throw std::invalid_argument("fit: gap tolerance must be positive");
    }
    if (config.solver.max_epochs < 1) {
        throw std::invalid_argument("fit: max_epochs must be at least 1");
    }

    FitPlan plan;
    plan.partition =
        partition_features(p, config.num_workers, mix_seed(config.seed, kPartitionStream));
    plan.tau_subs = config.projection_dim.resolve(p, config.num_workers);

    Index tau_max = 0;
    for (const auto& block : plan.partition.blocks) {
        tau_max = std::max(tau_max, static_cast<Index>(block.size()));
    }
    if (config.projection == ProjectionKind::srht && config.num_workers >= 2 &&
        plan.tau_subs > p - tau_max) {
        throw std::invalid_argument(
            "fit: projection_dim must not exceed p minus the largest block");
    }

    plan.fallback.resize(plan.partition.blocks.size());
    for (std::size_t k = 0; k < plan.partition.blocks.size(); ++k) {
        const Index tau_k = static_cast<Index>(plan.partition.blocks[k].size());
        plan.fallback[k] = config.projection == ProjectionKind::identity ||
                           plan.tau_subs >= p - tau_k;
        if (!plan.fallback[k]) plan.any_sketch_user = true;
    }
    if (plan.any_sketch_user) {
        // Everyone must be able to produce a sketch for the exchanged sum.
        for (const auto& block : plan.partition.blocks) {
            const auto padded = std::bit_ceil(static_cast<std::uint64_t>(block.size()));
            if (static_cast<std::uint64_t>(plan.tau_subs) > padded) {
                throw std::invalid_argument(
                    "fit: projection_dim exceeds a block's padded transform length");
            }
        }
    }
    return plan;
}

// Foreign raw columns for a fallback worker: the other blocks concatenated in
// block order.
Matrix concat_other_blocks(const std::vector<Matrix>& raw, std::size_t self) {
    Index total_cols = 0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
        if (j != self) total_cols += raw[j].cols();
    }
    Matrix out(raw[self].rows(), total_cols);
    Index cursor = 0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
        if (j == self) continue;
        out.middleCols(cursor, raw[j].cols()) = raw[j];
        cursor += raw[j].cols();
    }
    return out;
}

// Exchange volume: every worker broadcasts its sketch when sketches are in
// play, and a raw block travels whenever some other worker needs it verbatim.
std::int64_t count_exchanged_values(const FitPlan& plan, Index n) {
    const std::size_t num_workers = plan.partition.blocks.size();
    std::int64_t values = 0;
    if (plan.any_sketch_user) {
        values += static_cast<std::int64_t>(num_workers) * n * plan.tau_subs;
    }
    const std::size_t fallback_count = static_cast<std::size_t>(
        std::count(plan.fallback.begin(), plan.fallback.end(), true));
    for (std::size_t k = 0; k < num_workers; ++k) {
        const std::size_t others_needing_raw = fallback_count - (plan.fallback[k] ? 1 : 0);
        if (others_needing_raw > 0) {
            values += static_cast<std::int64_t>(n) *
                      static_cast<Index>(plan.partition.blocks[k].size());
        }
    }
    return values;
}

}  // namespace

Matrix LocalDesign::combined() const {
    Matrix out(raw.rows(), raw.cols() + summed_others.cols());
    out.leftCols(raw.cols()) = raw;
    out.rightCols(summed_others.cols()) = summed_others;
    return out;
}

Matrix tree_sum(const std::vector<RandomFeatureBlock>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("tree_sum: no blocks");
    const Index rows = blocks.front().values.rows();
    const Index cols = blocks.front().values.cols();
    for (const auto& block : blocks) {
        if (block.values.rows() != rows || block.values.cols() != cols) {
            throw std::invalid_argument("tree_sum: blocks disagree on shape");
        }
    }
    // Pairwise rounds over list positions: ((b0+b1)+(b2+b3))+... The order is
    // a pure function of the block count, so the result is bit-reproducible.
    std::vector<Matrix> layer;
    layer.reserve(blocks.size());
    for (const auto& block : blocks) layer.push_back(block.values);
    while (layer.size() > 1) {
        std::vector<Matrix> next;
        next.reserve((layer.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < layer.size(); i += 2) {
            next.push_back(layer[i] + layer[i + 1]);
        }
        if (layer.size() % 2 == 1) next.push_back(std::move(layer.back()));
        layer = std::move(next);
    }
    return std::move(layer.front());
}

LocalDesign build_local_design(const Eigen::Ref<const Matrix>& own_block,
                               const RandomFeatureBlock& own_rf,
                               const Eigen::Ref<const Matrix>& total_sum) {
    if (own_block.rows() != own_rf.values.rows() || own_block.rows() != total_sum.rows()) {
        throw std::invalid_argument("build_local_design: row counts disagree");
    }
    if (own_rf.values.cols() != total_sum.cols()) {
        throw std::invalid_argument("build_local_design: random-feature widths disagree");
    }
    LocalDesign design;
    design.worker_id = own_rf.worker_id;
    design.raw = own_block;
    design.summed_others = total_sum - own_rf.values;
    return design;
}

PrimalSolution fit(const Dataset& data, const FitConfig& config) {
    const auto total_start = Clock::now();
    data.validate_labels_for(config.loss);
    const Index n = data.num_rows();
    const Index p = data.num_cols();
    const FitPlan plan = plan_fit(p, config);
    const int num_workers = config.num_workers;

    std::vector<Matrix> raw(static_cast<std::size_t>(num_workers));
    for (std::size_t k = 0; k < raw.size(); ++k) {
        raw[k] = slice_columns(data, plan.partition.blocks[k]);
    }

    MetricsRecord metrics;

    // Projection phase: every worker sketches its own block concurrently.
    const auto projection_start = Clock::now();
    std::vector<RandomFeatureBlock> random_features(static_cast<std::size_t>(num_workers));
    if (plan.any_sketch_user) {
        detail::run_worker_tasks(num_workers, [&](int k) {
            const auto spec =
                make_srht(raw[static_cast<std::size_t>(k)].cols(), plan.tau_subs,
                          mix_seed(config.seed, kProjectionStream, static_cast<std::uint64_t>(k)));
            random_features[static_cast<std::size_t>(k)] = RandomFeatureBlock{
                k, project_block(raw[static_cast<std::size_t>(k)], spec)};
        });
        metrics.projections_computed = num_workers;
    }
    metrics.wall_time.projection_seconds = seconds_since(projection_start);

    // Exchange phase: the one communication round (tree-structured sum of the
    // sketches; raw blocks ride along only for fallback workers).
    const auto exchange_start = Clock::now();
    Matrix total_sum;
    if (plan.any_sketch_user) total_sum = tree_sum(random_features);
    metrics.exchange_rounds = 1;
    metrics.feature_values_exchanged = count_exchanged_values(plan, n);
    metrics.wall_time.communication_seconds = seconds_since(exchange_start);

    // Solve phase: independent local duals, then the dual-to-primal map
    // through the raw columns only.
    const auto solve_start = Clock::now();
    const double inv_nlambda = 1.0 / (static_cast<double>(n) * config.lambda);
    std::vector<Vector> beta_blocks(static_cast<std::size_t>(num_workers));
    detail::run_worker_tasks(num_workers, [&](int k) {
        const auto ku = static_cast<std::size_t>(k);
        LocalDesign design;
        if (plan.fallback[ku]) {
            design.worker_id = k;
            design.raw = raw[ku];
            design.summed_others = concat_other_blocks(raw, ku);
        } else {
            design = build_local_design(raw[ku], random_features[ku], total_sum);
        }
        auto [state, report] = local_dual_solve(
            design.combined(), data.labels, config.loss, config.lambda,
            config.solver.gap_tolerance, config.solver.max_epochs,
            mix_seed(config.seed, kSolverStream, static_cast<std::uint64_t>(k)));
        if (!report.converged) {
            throw ConvergenceError("fit: worker " + std::to_string(k) + " stalled at gap " +
                                       detail::format_scientific(report.final_gap),
                                   report.final_gap, k);
        }
        beta_blocks[ku] = -inv_nlambda * (raw[ku].transpose() * state.alpha);
    });
    metrics.wall_time.solve_seconds = seconds_since(solve_start);

    PrimalSolution solution;
    solution.coefficients = Vector::Zero(p);
    for (std::size_t k = 0; k < beta_blocks.size(); ++k) {
        const auto& block = plan.partition.blocks[k];
        for (std::size_t j = 0; j < block.size(); ++j) {
            solution.coefficients[block[j]] = beta_blocks[k][static_cast<Index>(j)];
        }
    }
    metrics.primal_values_returned = p;
    metrics.bytes_communicated =
        8 * (metrics.feature_values_exchanged + metrics.primal_values_returned);

    const Vector train_predictions = data.features * solution.coefficients;
    if (config.loss.is_classification()) {
        Index correct = 0;
        for (Index i = 0; i < n; ++i) {
            const double sign = train_predictions[i] >= 0.0 ? 1.0 : -1.0;
            if (sign == data.labels[i]) ++correct;
        }
        metrics.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    } else if (n >= 2) {
        const double mean = data.labels.mean();
        const double variance = (data.labels.array() - mean).matrix().squaredNorm();
        if (variance > 0.0) {
            metrics.train_mse_normalized = normalized_mse(train_predictions, data.labels);
        }
    }

    metrics.wall_time.total_seconds = seconds_since(total_start);
    solution.config = config;
    solution.config.projection_dim = ProjectionDim::count(plan.tau_subs);
    solution.metrics = metrics;
    return solution;
}

CvResult cross_validate(const Dataset& data, const FitConfig& config,
                        const std::vector<double>& lambdas, int folds, std::uint64_t cv_seed) {
    data.validate_labels_for(config.loss);
    if (lambdas.empty()) throw std::invalid_argument("cross_validate: empty lambda grid");
    for (const double lambda : lambdas) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw std::invalid_argument("cross_validate: lambdas must be positive and finite");
        }
    }
    const Index n = data.num_rows();
    if (folds < 2) throw std::invalid_argument("cross_validate: need at least two folds");
    if (static_cast<Index>(folds) > n) {
        throw std::invalid_argument("cross_validate: a fold would be empty");
    }
    const FitPlan plan = plan_fit(data.num_cols(), config);
    const int num_workers = config.num_workers;
    const auto num_lambdas = lambdas.size();

    std::vector<Matrix> raw(static_cast<std::size_t>(num_workers));
    for (std::size_t k = 0; k < raw.size(); ++k) {
        raw[k] = slice_columns(data, plan.partition.blocks[k]);
    }

    // Fold assignment: a cv_seed-keyed permutation cut into contiguous,
    // balanced chunks. Only the split depends on cv_seed; every numerical
    // substream still derives from config.seed.
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    detail::Rng fold_rng(cv_seed);
    fold_rng.shuffle(order);

    CvResult result;
    result.lambdas = lambdas;
    result.cells.assign(num_lambdas, std::vector<CvCell>(static_cast<std::size_t>(folds)));

    const Index base_fold = n / folds;
    const Index extra = n % folds;
    Index cursor = 0;
    for (int f = 0; f < folds; ++f) {
        const Index fold_size = base_fold + (static_cast<Index>(f) < extra ? 1 : 0);
        std::vector<Index> test_rows(order.begin() + cursor, order.begin() + cursor + fold_size);
        cursor += fold_size;
        std::sort(test_rows.begin(), test_rows.end());
        std::vector<Index> train_rows;
        train_rows.reserve(static_cast<std::size_t>(n - fold_size));
        {
            std::size_t t = 0;
            for (Index i = 0; i < n; ++i) {
                if (t < test_rows.size() && test_rows[t] == i) {
                    ++t;
                } else {
                    train_rows.push_back(i);
                }
            }
        }
        const Index n_train = static_cast<Index>(train_rows.size());
        const Index n_test = static_cast<Index>(test_rows.size());

        std::vector<Matrix> raw_train(raw.size());
        std::vector<Matrix> raw_test(raw.size());
        Vector labels_train(n_train);
        Vector labels_test(n_test);
        for (std::size_t k = 0; k < raw.size(); ++k) {
            raw_train[k].resize(n_train, raw[k].cols());
            for (Index i = 0; i < n_train; ++i) raw_train[k].row(i) = raw[k].row(train_rows[i]);
            raw_test[k].resize(n_test, raw[k].cols());
            for (Index i = 0; i < n_test; ++i) raw_test[k].row(i) = raw[k].row(test_rows[i]);
        }
        for (Index i = 0; i < n_train; ++i) labels_train[i] = data.labels[train_rows[i]];
        for (Index i = 0; i < n_test; ++i) labels_test[i] = data.labels[test_rows[i]];

        // Projections and the exchange happen once per fold; the designs are
        // shared by the whole lambda grid.
        const std::uint64_t fold_seed =
            mix_seed(config.seed, kFoldStream, static_cast<std::uint64_t>(f));
        std::vector<RandomFeatureBlock> random_features(raw.size());
        if (plan.any_sketch_user) {
            detail::run_worker_tasks(num_workers, [&](int k) {
                const auto ku = static_cast<std::size_t>(k);
                const auto spec =
                    make_srht(raw_train[ku].cols(), plan.tau_subs,
                              mix_seed(fold_seed, kProjectionStream, static_cast<std::uint64_t>(k)));
                random_features[ku] = RandomFeatureBlock{k, project_block(raw_train[ku], spec)};
            });
            result.projections_computed += num_workers;
        }
        Matrix total_sum;
        if (plan.any_sketch_user) total_sum = tree_sum(random_features);

        std::vector<Matrix> designs(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (plan.fallback[k]) {
                LocalDesign design;
                design.raw = raw_train[k];
                design.summed_others = concat_other_blocks(raw_train, k);
                designs[k] = design.combined();
            } else {
                designs[k] =
                    build_local_design(raw_train[k], random_features[k], total_sum).combined();
            }
        }

        for (std::size_t j = 0; j < num_lambdas; ++j) {
            const double lambda = lambdas[j];
            const double inv_nlambda = 1.0 / (static_cast<double>(n_train) * lambda);
            std::vector<Vector> beta_blocks(raw.size());
            try {
                detail::run_worker_tasks(num_workers, [&](int k) {
                    const auto ku = static_cast<std::size_t>(k);
                    auto [state, report] = local_dual_solve(
                        designs[ku], labels_train, config.loss, lambda,
                        config.solver.gap_tolerance, config.solver.max_epochs,
                        mix_seed(mix_seed(fold_seed, kSolverStream, static_cast<std::uint64_t>(k)),
                                 static_cast<std::uint64_t>(j)));
                    if (!report.converged) {
                        throw ConvergenceError(
                            "cross_validate: worker " + std::to_string(k) + " stalled at gap " +
                                detail::format_scientific(report.final_gap),
                            report.final_gap, k);
                    }
                    beta_blocks[ku] = -inv_nlambda * (raw_train[ku].transpose() * state.alpha);
                });
            } catch (const ConvergenceError& error) {
                result.warnings.push_back("fold " + std::to_string(f + 1) + ", lambda " +
                                          detail::format_scientific(lambda) + ": " + error.what());
                continue;
            }
            Vector predictions = Vector::Zero(n_test);
            for (std::size_t k = 0; k < raw.size(); ++k) {
                predictions.noalias() += raw_test[k] * beta_blocks[k];
            }
            auto& cell = result.cells[j][static_cast<std::size_t>(f)];
            cell.mse = (predictions - labels_test).squaredNorm() / static_cast<double>(n_test);
            cell.valid = true;
        }
    }

    result.mean_mse.assign(num_lambdas, 0.0);
    for (std::size_t j = 0; j < num_lambdas; ++j) {
        double sum = 0.0;
        int valid = 0;
        for (const auto& cell : result.cells[j]) {
            if (cell.valid) {
                sum += cell.mse;
                ++valid;
            }
        }
        if (valid == 0) {
            throw ConvergenceError("cross_validate: no fold converged for lambda " +
                                       std::to_string(lambdas[j]),
                                   std::numeric_limits<double>::quiet_NaN());
        }
        result.mean_mse[j] = sum / valid;
    }
    result.best_index = 0;
    for (std::size_t j = 1; j < num_lambdas; ++j) {
        if (result.mean_mse[j] < result.mean_mse[result.best_index]) result.best_index = j;
    }
    result.best_lambda = lambdas[result.best_index];
    return result;
}

Vector predict(const PrimalSolution& solution, const Eigen::Ref<const Matrix>& X_new) {
    if (X_new.cols() != solution.coefficients.size()) {
        throw std::invalid_argument("predict: feature count does not match the model");
    }
    return X_new * solution.coefficients;
}

Vector predict_labels(const PrimalSolution& solution, const Eigen::Ref<const Matrix>& X_new) {
    Vector raw = predict(solution, X_new);
    for (Index i = 0; i < raw.size(); ++i) raw[i] = raw[i] >= 0.0 ? 1.0 : -1.0;
    return raw;
}

ErrorBound theoretical_error_bound(Index r, Index tau_subs, double delta, double c0, int K) {
    if (r < 1 || tau_subs < 1 || K < 1) {
        throw std::invalid_argument("theoretical_error_bound: r, tau_subs, K must be positive");
    }
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw std::invalid_argument("theoretical_error_bound: delta must lie in (0,1)");
    }
    if (!(c0 > 0.0)) throw std::invalid_argument("theoretical_error_bound: c0 must be positive");
    ErrorBound bound;
    bound.rho = std::sqrt(c0 * std::log(2.0 * static_cast<double>(r) / delta) *
                          static_cast<double>(r) / static_cast<double>(tau_subs));
    bound.epsilon = std::sqrt(static_cast<double>(K)) * bound.rho;
    bound.in_regime = bound.epsilon < 1.0;
    bound.global_bound_factor = bound.in_regime
                                    ? bound.epsilon / (1.0 - bound.epsilon)
                                    : std::numeric_limits<double>::infinity();
    return bound;
}

Index numerical_rank(const Eigen::Ref<const Matrix>& X, double rel_tol) {
    if (X.rows() < 1 || X.cols() < 1) {
        throw std::invalid_argument("numerical_rank: empty matrix");
    }
    if (!(rel_tol > 0.0) || !(rel_tol < 1.0)) {
        throw std::invalid_argument("numerical_rank: rel_tol must lie in (0,1)");
    }
    Eigen::BDCSVD<Matrix> svd(X);
    const auto& values = svd.singularValues();
    if (values.size() == 0 || values[0] <= 0.0) return 0;
    const double cutoff = rel_tol * values[0];
    Index rank = 0;
    for (Index i = 0; i < values.size(); ++i) {
        if (values[i] > cutoff) ++rank;
    }
    return rank;
}

}  // namespace dualloco
