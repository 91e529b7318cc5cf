#pragma once

#include "dualloco/types.hpp"

#include <string>

namespace dualloco {

enum class DataFormat { csv, libsvm };

// csv: one row per sample, label first, then the features; a non-numeric
// first row is treated as a header. libsvm: "label idx:val ..." with 1-based
// indices, densified to declared_dimension when >= 0 and to the largest
// observed index otherwise. Row order follows the file. When
// binarize_positive is set, labels equal to it become +1 and everything else
// -1. Malformed content raises ParseError with the line number.
Dataset load_dataset(const std::string& path, DataFormat format, Index declared_dimension = -1,
                     std::optional<double> binarize_positive = std::nullopt);

// Full-precision csv writer (label first), inverse of the csv loader.
void save_dataset_csv(const std::string& path, const Dataset& data);

// Line-oriented model file: "key=value" header (config echo plus any
// metrics), then "coefficients=p", then p lines of "index value" with
// 1-based indices. Values are written with enough digits to round-trip
// doubles exactly.
void save_model(const std::string& path, const PrimalSolution& solution);
PrimalSolution load_model(const std::string& path);

DataFormat parse_format(const std::string& name);

}  // namespace dualloco
