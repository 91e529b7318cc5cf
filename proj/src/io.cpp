#include "dualloco/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <vector>

namespace dualloco {
namespace {

std::string_view trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t' || text.front() == '\r')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    return text;
}

bool parse_double(std::string_view token, double& out) {
    token = trim(token);
    // from_chars rejects an explicit plus, but "+1" labels are idiomatic in
    // libsvm files.
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const char* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), last, out);
    return ec == std::errc{} && ptr == last;
}

bool parse_index(std::string_view token, long& out) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const char* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), last, out);
    return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split(std::string_view text, char separator) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(separator, start);
        if (pos == std::string_view::npos) {
            out.push_back(text.substr(start));
            return out;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r') ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

// Decimal form with enough digits to parse back to the identical double.
std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

Dataset load_csv(std::istream& input, std::optional<double> binarize_positive) {
    std::string line;
    long line_number = 0;
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    Index width = -1;
    bool first_content_line = true;
    while (std::getline(input, line)) {
        ++line_number;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto cells = split(view, ',');
        std::vector<double> parsed(cells.size());
        bool numeric = true;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], parsed[c])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first_content_line) {
                first_content_line = false;  // header row
                continue;
            }
            throw ParseError("csv: non-numeric cell", line_number);
        }
        first_content_line = false;
        if (parsed.size() < 2) {
            throw ParseError("csv: row needs a label and at least one feature", line_number);
        }
        if (width < 0) {
            width = static_cast<Index>(parsed.size()) - 1;
        } else if (static_cast<Index>(parsed.size()) - 1 != width) {
            throw ParseError("csv: ragged row", line_number);
        }
        labels.push_back(parsed[0]);
        parsed.erase(parsed.begin());
        rows.push_back(std::move(parsed));
    }
    if (rows.empty()) throw ParseError("csv: no data rows", line_number == 0 ? 1 : line_number);

    Dataset data;
    data.features.resize(static_cast<Index>(rows.size()), width);
    data.labels.resize(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Index j = 0; j < width; ++j) {
            data.features(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        }
        data.labels[static_cast<Index>(i)] =
            binarize_positive ? (labels[i] == *binarize_positive ? 1.0 : -1.0) : labels[i];
    }
    return data;
}

Dataset load_libsvm(std::istream& input, Index declared_dimension,
                    std::optional<double> binarize_positive) {
    std::string line;
    long line_number = 0;
    std::vector<double> labels;
    std::vector<std::vector<std::pair<Index, double>>> rows;
    Index max_index = 0;
    while (std::getline(input, line)) {
        ++line_number;
        std::string_view view = trim(line);
        if (const auto comment = view.find('#'); comment != std::string_view::npos) {
            view = trim(view.substr(0, comment));
        }
        if (view.empty()) continue;
        const auto tokens = split_whitespace(view);
        double label = 0.0;
        if (!parse_double(tokens.front(), label)) {
            throw ParseError("libsvm: bad label", line_number);
        }
        std::vector<std::pair<Index, double>> entries;
        entries.reserve(tokens.size() - 1);
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const auto colon = tokens[t].find(':');
            if (colon == std::string_view::npos) {
                throw ParseError("libsvm: expected index:value", line_number);
            }
            long raw_index = 0;
            double value = 0.0;
            if (!parse_index(tokens[t].substr(0, colon), raw_index) || raw_index < 1) {
                throw ParseError("libsvm: feature indices are positive integers", line_number);
            }
            if (!parse_double(tokens[t].substr(colon + 1), value)) {
                throw ParseError("libsvm: bad feature value", line_number);
            }
            const Index index = static_cast<Index>(raw_index);
            if (declared_dimension >= 0 && index > declared_dimension) {
                throw ParseError("libsvm: index exceeds the declared dimension", line_number);
            }
            for (const auto& existing : entries) {
                if (existing.first == index) {
                    throw ParseError("libsvm: duplicate feature index", line_number);
                }
            }
            entries.emplace_back(index, value);
            max_index = std::max(max_index, index);
        }
        labels.push_back(label);
        rows.push_back(std::move(entries));
    }
    if (rows.empty()) throw ParseError("libsvm: no data rows", line_number == 0 ? 1 : line_number);
    const Index p = declared_dimension >= 0 ? declared_dimension : max_index;
    if (p < 1) throw ParseError("libsvm: no feature index seen and no dimension declared",
                                line_number);

    Dataset data;
    data.features = Matrix::Zero(static_cast<Index>(rows.size()), p);
    data.labels.resize(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [index, value] : rows[i]) {
            data.features(static_cast<Index>(i), index - 1) = value;
        }
        data.labels[static_cast<Index>(i)] =
            binarize_positive ? (labels[i] == *binarize_positive ? 1.0 : -1.0) : labels[i];
    }
    return data;
}

}  // namespace

DataFormat parse_format(const std::string& name) {
    if (name == "csv") return DataFormat::csv;
    if (name == "libsvm") return DataFormat::libsvm;
    throw std::invalid_argument("unknown data format: " + name);
}

Dataset load_dataset(const std::string& path, DataFormat format, Index declared_dimension,
                     std::optional<double> binarize_positive) {
    std::ifstream input(path);
    if (!input) throw ParseError("cannot open " + path, 0);
    Dataset data = format == DataFormat::csv
                       ? load_csv(input, binarize_positive)
                       : load_libsvm(input, declared_dimension, binarize_positive);
    data.validate();
    return data;
}

void save_dataset_csv(const std::string& path, const Dataset& data) {
    data.validate();
    std::ofstream output(path);
    if (!output) throw ParseError("cannot open " + path + " for writing", 0);
    for (Index i = 0; i < data.num_rows(); ++i) {
        output << format_double(data.labels[i]);
        for (Index j = 0; j < data.num_cols(); ++j) {
            output << ',' << format_double(data.features(i, j));
        }
        output << '\n';
    }
}

namespace {
constexpr std::string_view kModelMagic = "dualloco model 1";
}

void save_model(const std::string& path, const PrimalSolution& solution) {
    std::ofstream output(path);
    if (!output) throw ParseError("cannot open " + path + " for writing", 0);
    const FitConfig& config = solution.config;
    output << kModelMagic << '\n';
    output << "loss=" << loss_name(config.loss) << '\n';
    output << "smoothing=" << format_double(config.loss.smoothing) << '\n';
    output << "lambda=" << format_double(config.lambda) << '\n';
    output << "num_workers=" << config.num_workers << '\n';
    output << "projection=" << (config.projection == ProjectionKind::srht ? "srht" : "identity")
           << '\n';
    output << "projection_dim=" << format_double(config.projection_dim.value) << '\n';
    output << "projection_dim_is_fraction=" << (config.projection_dim.is_fraction ? 1 : 0) << '\n';
    output << "seed=" << config.seed << '\n';
    output << "gap_tolerance=" << format_double(config.solver.gap_tolerance) << '\n';
    output << "max_epochs=" << config.solver.max_epochs << '\n';
    if (solution.metrics) {
        // Only deterministic metrics belong in the file; wall times would
        // break reproducible-output guarantees.
        const MetricsRecord& metrics = *solution.metrics;
        if (metrics.train_mse_normalized) {
            output << "metric.train_mse_normalized=" << format_double(*metrics.train_mse_normalized)
                   << '\n';
        }
        if (metrics.train_accuracy) {
            output << "metric.train_accuracy=" << format_double(*metrics.train_accuracy) << '\n';
        }
        output << "metric.feature_values_exchanged=" << metrics.feature_values_exchanged << '\n';
        output << "metric.primal_values_returned=" << metrics.primal_values_returned << '\n';
        output << "metric.bytes_communicated=" << metrics.bytes_communicated << '\n';
        output << "metric.exchange_rounds=" << metrics.exchange_rounds << '\n';
        output << "metric.projections_computed=" << metrics.projections_computed << '\n';
    }
    output << "coefficients=" << solution.coefficients.size() << '\n';
    for (Index i = 0; i < solution.coefficients.size(); ++i) {
        output << (i + 1) << ' ' << format_double(solution.coefficients[i]) << '\n';
    }
}

PrimalSolution load_model(const std::string& path) {
    std::ifstream input(path);
    if (!input) throw ParseError("cannot open " + path, 0);
    std::string line;
    long line_number = 0;
    if (!std::getline(input, line) || trim(line) != kModelMagic) {
        throw ParseError("not a model file", 1);
    }
    ++line_number;

    PrimalSolution solution;
    Index coefficient_count = -1;
    while (std::getline(input, line)) {
        ++line_number;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto equals = view.find('=');
        if (equals == std::string_view::npos) {
            throw ParseError("model: expected key=value", line_number);
        }
        const std::string_view key = view.substr(0, equals);
        const std::string_view value = view.substr(equals + 1);
        double numeric = 0.0;
        if (key == "loss") {
            solution.config.loss.kind = make_loss(std::string(value)).kind;
        } else if (key == "smoothing") {
            if (!parse_double(value, numeric)) throw ParseError("model: bad smoothing", line_number);
            solution.config.loss.smoothing = numeric;
        } else if (key == "lambda") {
            if (!parse_double(value, numeric)) throw ParseError("model: bad lambda", line_number);
            solution.config.lambda = numeric;
        } else if (key == "num_workers") {
            long workers = 0;
            if (!parse_index(value, workers) || workers < 1) {
                throw ParseError("model: bad num_workers", line_number);
            }
            solution.config.num_workers = static_cast<int>(workers);
        } else if (key == "projection") {
            if (value == "srht") {
                solution.config.projection = ProjectionKind::srht;
            } else if (value == "identity") {
                solution.config.projection = ProjectionKind::identity;
            } else {
                throw ParseError("model: bad projection", line_number);
            }
        } else if (key == "projection_dim") {
            if (!parse_double(value, numeric)) {
                throw ParseError("model: bad projection_dim", line_number);
            }
            solution.config.projection_dim.value = numeric;
        } else if (key == "projection_dim_is_fraction") {
            solution.config.projection_dim.is_fraction = value == "1";
        } else if (key == "seed") {
            unsigned long long seed = 0;
            const std::string_view trimmed = trim(value);
            const auto [ptr, ec] =
                std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), seed);
            if (ec != std::errc{} || ptr != trimmed.data() + trimmed.size()) {
                throw ParseError("model: bad seed", line_number);
            }
            solution.config.seed = seed;
        } else if (key == "gap_tolerance") {
            if (!parse_double(value, numeric)) {
                throw ParseError("model: bad gap_tolerance", line_number);
            }
            solution.config.solver.gap_tolerance = numeric;
        } else if (key == "max_epochs") {
            long epochs = 0;
            if (!parse_index(value, epochs) || epochs < 1) {
                throw ParseError("model: bad max_epochs", line_number);
            }
            solution.config.solver.max_epochs = static_cast<int>(epochs);
        } else if (key.substr(0, 7) == "metric.") {
            // Metrics echo informational values; they are not reloaded.
        } else if (key == "coefficients") {
            long count = 0;
            if (!parse_index(value, count) || count < 1) {
                throw ParseError("model: bad coefficient count", line_number);
            }
            coefficient_count = static_cast<Index>(count);
            break;
        } else {
            throw ParseError("model: unknown key '" + std::string(key) + "'", line_number);
        }
    }
    if (coefficient_count < 0) throw ParseError("model: missing coefficients block", line_number);

    solution.coefficients.resize(coefficient_count);
    std::vector<bool> seen(static_cast<std::size_t>(coefficient_count), false);
    for (Index remaining = coefficient_count; remaining > 0; --remaining) {
        if (!std::getline(input, line)) {
            throw ParseError("model: truncated coefficients block", line_number);
        }
        ++line_number;
        const auto tokens = split_whitespace(trim(line));
        long index = 0;
        double value = 0.0;
        if (tokens.size() != 2 || !parse_index(tokens[0], index) ||
            !parse_double(tokens[1], value) || index < 1 || index > coefficient_count) {
            throw ParseError("model: bad coefficient line", line_number);
        }
        if (seen[static_cast<std::size_t>(index - 1)]) {
            throw ParseError("model: duplicate coefficient index", line_number);
        }
        seen[static_cast<std::size_t>(index - 1)] = true;
        solution.coefficients[static_cast<Index>(index - 1)] = value;
    }
    while (std::getline(input, line)) {
        ++line_number;
        if (!trim(line).empty()) throw ParseError("model: trailing content", line_number);
    }
    return solution;
}

}  // namespace dualloco
