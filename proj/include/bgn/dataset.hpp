#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgn/core.hpp"

namespace bgn {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FileNotFoundError : DataError {
    using DataError::DataError;
};
struct EmptyFileError : DataError {
    using DataError::DataError;
};
struct MissingColumnError : DataError {
    using DataError::DataError;
};
struct CellParseError : DataError {
    CellParseError(const std::string& msg, std::size_t row, std::size_t col)
        : DataError(msg), row(row), col(col) {}
    std::size_t row;  // 1-based data row
    std::size_t col;  // 1-based column
};
struct EmptySplitError : DataError {
    using DataError::DataError;
};

/// Per-feature statistics recorded when a dataset gets standardized.
struct FeatureStats {
    double mean = 0.0;
    double stddev = 1.0;  // population stddev as measured on the training split
};

/// Guard used everywhere a standardized value is computed: constant columns
/// (stddev below 1e-12) are divided by 1 instead, mapping them to all zeros.
inline double std_divisor(double stddev) { return stddev < 1e-12 ? 1.0 : stddev; }

/// Immutable tabular regression data. Features only are ever standardized;
/// labels always stay in their original units.
struct Dataset {
    Matrix features;  // m x d
    std::vector<double> labels;
    std::vector<std::string> feature_names;
    std::optional<std::vector<FeatureStats>> standardization;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols; }
};

struct SplitSpec {
    double train_fraction = 0.70;
    double valid_fraction = 0.15;
    std::uint64_t seed = 0;
};

struct Splits {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Loads a comma-separated file (header row, '.' decimals, no quoting).
/// All non-target columns become features in header order.
Dataset load_csv(const std::string& path, const std::string& target_column);

/// Deterministic split: a Fisher-Yates permutation of row indices driven by
/// Rng(spec.seed), then the first floor(m*train_fraction) rows go to train,
/// the next floor(m*valid_fraction) to validation, and the remainder to test.
Splits split(const Dataset& data, const SplitSpec& spec);

/// Computes per-column mean / population stddev on `train` only and applies
/// them to train and every dataset in `others`. Statistics are stored in all
/// resulting datasets.
std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train,
                                                     const std::vector<Dataset>& others);

/// Inverse of standardize for a dataset that carries statistics.
Dataset unstandardize(const Dataset& data);

}  // namespace bgn
