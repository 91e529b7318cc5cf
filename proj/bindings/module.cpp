#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualloco/io.hpp"
#include "dualloco/losses.hpp"
#include "dualloco/metrics.hpp"
#include "dualloco/partition.hpp"
#include "dualloco/runtime.hpp"
#include "dualloco/sketch.hpp"
#include "dualloco/solver.hpp"

namespace py = pybind11;

namespace {

using namespace dualloco;

Dataset make_dataset(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y) {
    Dataset data;
    data.features = X;
    data.labels = y;
    return data;
}

FitConfig make_config(double lam, int workers, const py::object& tau_subs,
                      const std::string& loss, double smoothing, double gap_tol, int max_epochs,
                      std::uint64_t seed, const std::string& projection) {
    FitConfig config;
    config.lambda = lam;
    config.num_workers = workers;
    config.loss = make_loss(loss, smoothing);
    config.solver.gap_tolerance = gap_tol;
    config.solver.max_epochs = max_epochs;
    config.seed = seed;
    if (projection == "srht") {
        config.projection = ProjectionKind::srht;
    } else if (projection == "identity") {
        config.projection = ProjectionKind::identity;
    } else {
        throw std::invalid_argument("unknown projection: " + projection);
    }
    // Python ints become absolute column counts, floats become fractions of
    // the foreign-column budget.
    if (py::isinstance<py::int_>(tau_subs)) {
        config.projection_dim = ProjectionDim::count(tau_subs.cast<Index>());
    } else if (py::isinstance<py::float_>(tau_subs)) {
        config.projection_dim = ProjectionDim::fraction(tau_subs.cast<double>());
    } else {
        throw std::invalid_argument("tau_subs must be an int or a float");
    }
    return config;
}

py::dict metrics_dict(const MetricsRecord& metrics) {
    py::dict out;
    if (metrics.train_mse_normalized) out["train_mse_normalized"] = *metrics.train_mse_normalized;
    if (metrics.test_mse_normalized) out["test_mse_normalized"] = *metrics.test_mse_normalized;
    if (metrics.param_mse_normalized) out["param_mse_normalized"] = *metrics.param_mse_normalized;
    if (metrics.train_accuracy) out["train_accuracy"] = *metrics.train_accuracy;
    if (metrics.test_accuracy) out["test_accuracy"] = *metrics.test_accuracy;
    out["feature_values_exchanged"] = metrics.feature_values_exchanged;
    out["primal_values_returned"] = metrics.primal_values_returned;
    out["bytes_communicated"] = metrics.bytes_communicated;
    out["exchange_rounds"] = metrics.exchange_rounds;
    out["projections_computed"] = metrics.projections_computed;
    out["time_projection_s"] = metrics.wall_time.projection_seconds;
    out["time_communication_s"] = metrics.wall_time.communication_seconds;
    out["time_solve_s"] = metrics.wall_time.solve_seconds;
    out["time_total_s"] = metrics.wall_time.total_seconds;
    return out;
}

}  // namespace

PYBIND11_MODULE(_dualloco, m) {
    using namespace dualloco;
    m.doc() = "One-communication-round distributed l2-penalized estimation";

    py::class_<SrhtSpec>(m, "SrhtSpec")
        .def_readonly("source_dim", &SrhtSpec::source_dim)
        .def_readonly("target_dim", &SrhtSpec::target_dim)
        .def_readonly("padded_dim", &SrhtSpec::padded_dim)
        .def_readonly("sign_flips", &SrhtSpec::sign_flips)
        .def_readonly("sample_indices", &SrhtSpec::sample_indices)
        .def_readonly("scale", &SrhtSpec::scale);

    m.def("fwht", [](Vector values) {
        fwht_in_place(values);
        return values;
    }, py::arg("values"), "Orthonormal Walsh-Hadamard transform (power-of-two length)");

    m.def("make_srht", &make_srht, py::arg("source_dim"), py::arg("target_dim"), py::arg("seed"));
    m.def("project_block", &project_block, py::arg("block"), py::arg("spec"));
    m.def("spectral_deviation", &spectral_deviation, py::arg("V"), py::arg("spec"));

    m.def("partition_features", [](Index p, int workers, std::uint64_t seed) {
        return partition_features(p, workers, seed).blocks;
    }, py::arg("p"), py::arg("workers"), py::arg("seed"),
       "Balanced random feature blocks as lists of 0-based column indices");

    m.def("loss_value", [](const std::string& loss, double u, double y, double smoothing) {
        return loss_value(make_loss(loss, smoothing), u, y);
    }, py::arg("loss"), py::arg("u"), py::arg("y"), py::arg("smoothing") = 1.0);
    m.def("conjugate_value", [](const std::string& loss, double a, double y, double smoothing) {
        return conjugate_value(make_loss(loss, smoothing), a, y);
    }, py::arg("loss"), py::arg("a"), py::arg("y"), py::arg("smoothing") = 1.0);
    m.def("coordinate_update",
          [](const std::string& loss, double current, double y, double margin, double row_norm_sq,
             Index n, double lam, double smoothing) {
              return coordinate_update(make_loss(loss, smoothing), current, y, margin,
                                       row_norm_sq, n, lam);
          },
          py::arg("loss"), py::arg("current"), py::arg("y"), py::arg("margin"),
          py::arg("row_norm_sq"), py::arg("n"), py::arg("lam"), py::arg("smoothing") = 1.0);

    m.def("tree_sum", [](const std::vector<Matrix>& blocks) {
        std::vector<RandomFeatureBlock> wrapped(blocks.size());
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            wrapped[k] = RandomFeatureBlock{static_cast<int>(k), blocks[k]};
        }
        return tree_sum(wrapped);
    }, py::arg("blocks"), "Deterministic pairwise-tree sum of equally shaped matrices");

    m.def("local_dual_solve",
          [](const Eigen::Ref<const Matrix>& design, const Vector& labels,
             const std::string& loss, double lam, double tol, int max_epochs, std::uint64_t seed,
             double smoothing) {
              auto [state, report] = local_dual_solve(design, labels, make_loss(loss, smoothing),
                                                      lam, tol, max_epochs, seed);
              py::dict info;
              info["epochs_run"] = report.epochs_run;
              info["final_gap"] = report.final_gap;
              info["primal_objective"] = report.primal_objective;
              info["dual_objective"] = report.dual_objective;
              info["converged"] = report.converged;
              info["gap_history"] = report.gap_history;
              return py::make_tuple(state.alpha, state.primal_cache, info);
          },
          py::arg("design"), py::arg("labels"), py::arg("loss"), py::arg("lam"),
          py::arg("tol") = 1e-8, py::arg("max_epochs") = 1000, py::arg("seed") = 0,
          py::arg("smoothing") = 1.0,
          "Returns (alpha, beta, report); beta is -(1/(n lam)) design^T alpha");

    m.def("exact_solve",
          [](const Eigen::Ref<const Matrix>& X, const Vector& y, const std::string& loss,
             double lam, double tol, int max_epochs, double smoothing) {
              return exact_solve(make_dataset(X, y), make_loss(loss, smoothing), lam, tol,
                                 max_epochs)
                  .coefficients;
          },
          py::arg("X"), py::arg("y"), py::arg("loss") = "squared", py::arg("lam") = 1.0,
          py::arg("tol") = 1e-10, py::arg("max_epochs") = 100000, py::arg("smoothing") = 1.0);

    m.def("fit",
          [](const Eigen::Ref<const Matrix>& X, const Vector& y, double lam, int workers,
             const py::object& tau_subs, const std::string& loss, double smoothing,
             double gap_tol, int max_epochs, std::uint64_t seed, const std::string& projection) {
              const PrimalSolution solution =
                  fit(make_dataset(X, y), make_config(lam, workers, tau_subs, loss, smoothing,
                                                      gap_tol, max_epochs, seed, projection));
              return py::make_tuple(solution.coefficients,
                                    solution.metrics ? metrics_dict(*solution.metrics)
                                                     : py::dict());
          },
          py::arg("X"), py::arg("y"), py::arg("lam") = 1.0, py::arg("workers") = 1,
          py::arg("tau_subs") = py::float_(0.01), py::arg("loss") = "squared",
          py::arg("smoothing") = 1.0, py::arg("gap_tol") = 1e-8, py::arg("max_epochs") = 1000,
          py::arg("seed") = 0, py::arg("projection") = "srht",
          "Returns (coefficients, metrics)");

    m.def("cross_validate",
          [](const Eigen::Ref<const Matrix>& X, const Vector& y,
             const std::vector<double>& lambdas, int folds, std::uint64_t cv_seed, int workers,
             const py::object& tau_subs, const std::string& loss, double smoothing,
             double gap_tol, int max_epochs, std::uint64_t seed, const std::string& projection) {
              const CvResult result = cross_validate(
                  make_dataset(X, y),
                  make_config(1.0, workers, tau_subs, loss, smoothing, gap_tol, max_epochs, seed,
                              projection),
                  lambdas, folds, cv_seed);
              py::dict out;
              out["best_lambda"] = result.best_lambda;
              out["best_index"] = result.best_index;
              out["lambdas"] = result.lambdas;
              out["mean_mse"] = result.mean_mse;
              out["projections_computed"] = result.projections_computed;
              out["warnings"] = result.warnings;
              return out;
          },
          py::arg("X"), py::arg("y"), py::arg("lambdas"), py::arg("folds") = 5,
          py::arg("cv_seed") = 0, py::arg("workers") = 1,
          py::arg("tau_subs") = py::float_(0.01), py::arg("loss") = "squared",
          py::arg("smoothing") = 1.0, py::arg("gap_tol") = 1e-8, py::arg("max_epochs") = 1000,
          py::arg("seed") = 0, py::arg("projection") = "srht");

    m.def("predict", [](const Eigen::Ref<const Matrix>& X, const Vector& beta) {
        PrimalSolution solution;
        solution.coefficients = beta;
        return predict(solution, X);
    }, py::arg("X"), py::arg("beta"));

    m.def("predict_labels", [](const Eigen::Ref<const Matrix>& X, const Vector& beta) {
        PrimalSolution solution;
        solution.coefficients = beta;
        return predict_labels(solution, X);
    }, py::arg("X"), py::arg("beta"));

    m.def("theoretical_error_bound",
          [](Index r, Index tau_subs, double delta, double c0, int K) {
              const ErrorBound bound = theoretical_error_bound(r, tau_subs, delta, c0, K);
              py::dict out;
              out["rho"] = bound.rho;
              out["epsilon"] = bound.epsilon;
              out["global_bound_factor"] = bound.global_bound_factor;
              out["in_regime"] = bound.in_regime;
              return out;
          },
          py::arg("r"), py::arg("tau_subs"), py::arg("delta") = 0.1, py::arg("c0") = 1.0,
          py::arg("K") = 1);

    m.def("numerical_rank", &numerical_rank, py::arg("X"), py::arg("rel_tol") = 1e-10);
    m.def("normalized_mse", &normalized_mse, py::arg("predictions"), py::arg("truth"));
    m.def("normalized_param_mse", &normalized_param_mse, py::arg("estimate"), py::arg("truth"));
}
