#include "dualloco/cli.hpp"

#include "dualloco/io.hpp"
#include "dualloco/metrics.hpp"
#include "dualloco/runtime.hpp"
#include "dualloco/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

namespace dualloco {
namespace {

std::string fmt(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

// Shared data flags for every subcommand that reads a dataset.
struct DataArgs {
    std::string path;
    std::string format = "csv";
    long dimension = -1;
    double binarize = 0.0;
    bool has_binarize = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", path, "input dataset")->required();
        cmd->add_option("--format", format, "csv or libsvm");
        cmd->add_option("--dimension", dimension, "declared libsvm feature count");
        cmd->add_option("--binarize", binarize, "label value mapped to +1, everything else to -1")
            ->each([this](const std::string&) { has_binarize = true; });
    }

    Dataset load() const {
        return load_dataset(path, parse_format(format), static_cast<Index>(dimension),
                            has_binarize ? std::optional<double>(binarize) : std::nullopt);
    }
};

struct FitArgs {
    DataArgs data;
    std::string loss = "squared";
    double smoothing = 1.0;
    int workers = 1;
    double lambda = 1.0;
    std::string tau_subs = "0.01";
    std::uint64_t seed = 0;
    double gap_tol = 1e-8;
    int max_epochs = 1000;
    std::string projection = "srht";

    void attach(CLI::App* cmd) {
        data.attach(cmd);
        cmd->add_option("--loss", loss, "squared, logistic, smoothed_hinge, or hinge");
        cmd->add_option("--smoothing", smoothing, "smoothed_hinge quadratic width");
        cmd->add_option("--workers", workers, "number of feature-partitioned workers");
        cmd->add_option("--lambda", lambda, "l2 penalty weight");
        cmd->add_option("--tau-subs", tau_subs,
                        "projection columns: integer count or fraction of the foreign columns "
                        "(e.g. 96 or 0.01)");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--gap-tol", gap_tol, "duality-gap stopping tolerance");
        cmd->add_option("--max-epochs", max_epochs, "solver epoch cap");
        cmd->add_option("--projection", projection, "srht or identity");
    }

    FitConfig config() const {
        FitConfig cfg;
        cfg.lambda = lambda;
        cfg.num_workers = workers;
        cfg.loss = make_loss(loss, smoothing);
        cfg.solver.gap_tolerance = gap_tol;
        cfg.solver.max_epochs = max_epochs;
        cfg.seed = seed;
        if (projection == "srht") {
            cfg.projection = ProjectionKind::srht;
        } else if (projection == "identity") {
            cfg.projection = ProjectionKind::identity;
        } else {
            throw std::invalid_argument("unknown projection: " + projection);
        }
        double parsed = 0.0;
        try {
            std::size_t consumed = 0;
            parsed = std::stod(tau_subs, &consumed);
            if (consumed != tau_subs.size()) throw std::invalid_argument("");
        } catch (...) {
            throw std::invalid_argument("--tau-subs must be a number, got '" + tau_subs + "'");
        }
        const bool looks_fractional =
            tau_subs.find('.') != std::string::npos || (parsed > 0.0 && parsed < 1.0);
        cfg.projection_dim = looks_fractional ? ProjectionDim::fraction(parsed)
                                              : ProjectionDim::count(static_cast<Index>(parsed));
        return cfg;
    }
};

void print_metrics(std::ostream& out, const MetricsRecord& metrics) {
    if (metrics.train_mse_normalized) {
        out << "train_mse_normalized=" << fmt(*metrics.train_mse_normalized) << '\n';
    }
    if (metrics.test_mse_normalized) {
        out << "test_mse_normalized=" << fmt(*metrics.test_mse_normalized) << '\n';
    }
    if (metrics.param_mse_normalized) {
        out << "param_mse_normalized=" << fmt(*metrics.param_mse_normalized) << '\n';
    }
    if (metrics.train_accuracy) out << "train_accuracy=" << fmt(*metrics.train_accuracy) << '\n';
    if (metrics.test_accuracy) out << "test_accuracy=" << fmt(*metrics.test_accuracy) << '\n';
    out << "feature_values_exchanged=" << metrics.feature_values_exchanged << '\n';
    out << "primal_values_returned=" << metrics.primal_values_returned << '\n';
    out << "bytes_communicated=" << metrics.bytes_communicated << '\n';
    out << "exchange_rounds=" << metrics.exchange_rounds << '\n';
    out << "projections_computed=" << metrics.projections_computed << '\n';
    out << "time_projection_s=" << fmt(metrics.wall_time.projection_seconds) << '\n';
    out << "time_communication_s=" << fmt(metrics.wall_time.communication_seconds) << '\n';
    out << "time_solve_s=" << fmt(metrics.wall_time.solve_seconds) << '\n';
    out << "time_total_s=" << fmt(metrics.wall_time.total_seconds) << '\n';
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ParseError& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 2;
    } catch (const ConvergenceError& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 3;
    } catch (const std::logic_error& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 1;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 2;
    }
}

double accuracy(const Vector& labels, const Vector& margins) {
    Index correct = 0;
    for (Index i = 0; i < labels.size(); ++i) {
        const double sign = margins[i] >= 0.0 ? 1.0 : -1.0;
        if (sign == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"dualloco: one-communication-round distributed l2-penalized fitting"};
    app.require_subcommand(1);

    FitArgs fit_args;
    std::string fit_out;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model and write it to a file");
    fit_args.attach(fit_cmd);
    fit_cmd->add_option("--out", fit_out, "model file to write")->required();

    FitArgs cv_args;
    std::string cv_lambdas;
    int cv_folds = 5;
    std::uint64_t cv_seed = 0;
    auto* cv_cmd = app.add_subcommand("cv", "cross-validate a lambda grid");
    cv_args.attach(cv_cmd);
    cv_cmd->add_option("--lambdas", cv_lambdas, "comma-separated lambda grid")->required();
    cv_cmd->add_option("--folds", cv_folds, "number of folds");
    cv_cmd->add_option("--cv-seed", cv_seed, "seed for the fold split only");

    FitArgs compare_args;
    std::string compare_test;
    auto* compare_cmd =
        app.add_subcommand("compare", "fit against the exact single-machine baseline");
    compare_args.attach(compare_cmd);
    compare_cmd->add_option("--test", compare_test, "optional held-out dataset (same format)");

    long bound_rank = 0;
    long bound_tau = 0;
    double bound_delta = 0.1;
    double bound_c0 = 1.0;
    int bound_workers = 1;
    auto* bound_cmd = app.add_subcommand("bound", "evaluate the theoretical error bound");
    bound_cmd->add_option("--rank", bound_rank, "numerical rank r")->required();
    bound_cmd->add_option("--tau-subs", bound_tau, "projection columns")->required();
    bound_cmd->add_option("--delta", bound_delta, "failure probability");
    bound_cmd->add_option("--c0", bound_c0, "leading constant");
    bound_cmd->add_option("--workers", bound_workers, "number of workers K");

    DataArgs rank_data;
    double rank_tol = 1e-10;
    auto* rank_cmd = app.add_subcommand("rank", "numerical rank of a dataset's feature matrix");
    rank_data.attach(rank_cmd);
    rank_cmd->add_option("--rel-tol", rank_tol, "relative singular-value cutoff");

    DataArgs predict_data;
    std::string predict_model;
    std::string predict_out;
    bool predict_signs = false;
    auto* predict_cmd = app.add_subcommand("predict", "apply a saved model to a dataset");
    predict_data.attach(predict_cmd);
    predict_cmd->add_option("--model", predict_model, "model file")->required();
    predict_cmd->add_option("--out", predict_out, "predictions file to write")->required();
    predict_cmd->add_flag("--signs", predict_signs, "write thresholded +-1 labels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::CallForAllHelp& help) {
        return app.exit(help);
    } catch (const CLI::CallForVersion& version) {
        return app.exit(version);
    } catch (const CLI::ParseError& error) {
        app.exit(error);
        return 1;
    }

    if (fit_cmd->parsed()) {
        return guarded([&] {
            const Dataset data = fit_args.data.load();
            const PrimalSolution solution = fit(data, fit_args.config());
            save_model(fit_out, solution);
            std::cout << "n=" << data.num_rows() << " p=" << data.num_cols()
                      << " workers=" << solution.config.num_workers
                      << " tau_subs=" << static_cast<Index>(solution.config.projection_dim.value)
                      << '\n';
            if (solution.metrics) print_metrics(std::cout, *solution.metrics);
            std::cout << "model written to " << fit_out << '\n';
            return 0;
        });
    }

    if (cv_cmd->parsed()) {
        return guarded([&] {
            const Dataset data = cv_args.data.load();
            std::vector<double> grid;
            std::size_t start = 0;
            while (start <= cv_lambdas.size()) {
                const std::size_t comma = cv_lambdas.find(',', start);
                const std::string token =
                    cv_lambdas.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start);
                if (token.empty()) throw std::invalid_argument("--lambdas has an empty entry");
                grid.push_back(std::stod(token));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            const CvResult result = cross_validate(data, cv_args.config(), grid, cv_folds, cv_seed);
            for (const auto& warning : result.warnings) {
                std::cerr << "warning: " << warning << '\n';
            }
            std::cout << "lambda mean_cv_mse valid_folds\n";
            for (std::size_t j = 0; j < result.lambdas.size(); ++j) {
                int valid = 0;
                for (const auto& cell : result.cells[j]) valid += cell.valid ? 1 : 0;
                std::cout << fmt(result.lambdas[j]) << ' ' << fmt(result.mean_mse[j]) << ' '
                          << valid << '\n';
            }
            std::cout << "projections_computed=" << result.projections_computed << '\n';
            std::cout << "best_lambda=" << fmt(result.best_lambda) << '\n';
            return 0;
        });
    }

    if (compare_cmd->parsed()) {
        return guarded([&] {
            const Dataset data = compare_args.data.load();
            const FitConfig config = compare_args.config();
            const PrimalSolution approx = fit(data, config);
            // The baseline must be clearly tighter than the run under test.
            const double exact_tol = std::max(config.solver.gap_tolerance * 1e-2, 1e-12);
            const PrimalSolution reference = exact_solve(data, config.loss, config.lambda,
                                                         exact_tol,
                                                         std::max(config.solver.max_epochs * 10,
                                                                  100000));
            std::cout << "param_mse_normalized="
                      << fmt(normalized_param_mse(approx.coefficients, reference.coefficients))
                      << '\n';
            const Vector train_approx = predict(approx, data.features);
            const Vector train_exact = predict(reference, data.features);
            if (config.loss.is_classification()) {
                std::cout << "train_accuracy_dualloco=" << fmt(accuracy(data.labels, train_approx))
                          << '\n';
                std::cout << "train_accuracy_exact=" << fmt(accuracy(data.labels, train_exact))
                          << '\n';
            } else {
                std::cout << "train_mse_dualloco=" << fmt(normalized_mse(train_approx, data.labels))
                          << '\n';
                std::cout << "train_mse_exact=" << fmt(normalized_mse(train_exact, data.labels))
                          << '\n';
            }
            if (!compare_test.empty()) {
                DataArgs test_args = compare_args.data;
                test_args.path = compare_test;
                const Dataset test = test_args.load();
                const Vector test_approx = predict(approx, test.features);
                const Vector test_exact = predict(reference, test.features);
                if (config.loss.is_classification()) {
                    std::cout << "test_accuracy_dualloco="
                              << fmt(accuracy(test.labels, test_approx)) << '\n';
                    std::cout << "test_accuracy_exact=" << fmt(accuracy(test.labels, test_exact))
                              << '\n';
                } else {
                    std::cout << "test_mse_dualloco="
                              << fmt(normalized_mse(test_approx, test.labels)) << '\n';
                    std::cout << "test_mse_exact=" << fmt(normalized_mse(test_exact, test.labels))
                              << '\n';
                }
            }
            return 0;
        });
    }

    if (bound_cmd->parsed()) {
        return guarded([&] {
            const ErrorBound bound =
                theoretical_error_bound(static_cast<Index>(bound_rank),
                                        static_cast<Index>(bound_tau), bound_delta, bound_c0,
                                        bound_workers);
            std::cout << "rho=" << fmt(bound.rho) << '\n';
            std::cout << "epsilon=" << fmt(bound.epsilon) << '\n';
            std::cout << "global_bound_factor=" << fmt(bound.global_bound_factor) << '\n';
            std::cout << "in_regime=" << (bound.in_regime ? 1 : 0) << '\n';
            return 0;
        });
    }

    if (rank_cmd->parsed()) {
        return guarded([&] {
            const Dataset data = rank_data.load();
            std::cout << "rank=" << numerical_rank(data.features, rank_tol) << '\n';
            return 0;
        });
    }

    if (predict_cmd->parsed()) {
        return guarded([&] {
            const PrimalSolution model = load_model(predict_model);
            const Dataset data = predict_data.load();
            const Vector out = predict_signs ? predict_labels(model, data.features)
                                             : predict(model, data.features);
            std::ofstream file(predict_out);
            if (!file) throw ParseError("cannot open " + predict_out + " for writing", 0);
            for (Index i = 0; i < out.size(); ++i) file << fmt(out[i]) << '\n';
            std::cout << "predictions written to " << predict_out << '\n';
            return 0;
        });
    }

    std::cerr << "error: no subcommand given\n";
    return 1;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("dualloco");
    for (const auto& arg : args) argv.push_back(arg.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dualloco
