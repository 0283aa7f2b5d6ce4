#include "bgn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bgn/rng.hpp"

namespace bgn {

std::string format_sig(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw CellParseError("non-numeric cell at row " + std::to_string(row) + ", column " +
                                 std::to_string(col) + ": \"" + cell + "\"",
                             row, col);
    }
    return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw EmptyFileError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_line(line);
    std::size_t target_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == target_column) {
            target_idx = j;
            break;
        }
    }
    if (target_idx == header.size())
        throw MissingColumnError("target column \"" + target_column + "\" not in header of " +
                                 path);
    if (header.size() < 2)
        throw MissingColumnError("no feature columns besides target in " + path);

    Dataset ds;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != target_idx) ds.feature_names.push_back(header[j]);

    const std::size_t d = header.size() - 1;
    std::vector<double> values;
    std::size_t m = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw CellParseError("row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()),
                                 row, cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const double v = parse_cell(cells[j], row, j + 1);
            if (j == target_idx)
                ds.labels.push_back(v);
            else
                values.push_back(v);
        }
        ++m;
    }
    if (m == 0) throw EmptyFileError("no data rows in " + path);

    ds.features.rows = m;
    ds.features.cols = d;
    ds.features.data = std::move(values);
    return ds;
}

namespace {

Dataset take_rows(const Dataset& data, std::span<const std::size_t> idx) {
    Dataset out;
    out.feature_names = data.feature_names;
    out.standardization = data.standardization;
    out.features = Matrix(idx.size(), data.dim());
    out.labels.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = data.features.row(idx[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(data.labels[idx[i]]);
    }
    return out;
}

}  // namespace

Splits split(const Dataset& data, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.valid_fraction > 0.0 &&
          spec.train_fraction + spec.valid_fraction < 1.0))
        throw std::invalid_argument("split fractions must be positive and sum below 1");

    const std::size_t m = data.size();
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(perm);

    const auto n_train = static_cast<std::size_t>(std::floor(double(m) * spec.train_fraction));
    const auto n_valid = static_cast<std::size_t>(std::floor(double(m) * spec.valid_fraction));
    const std::size_t n_test = m - n_train - n_valid;
    if (n_train == 0 || n_valid == 0 || n_test == 0)
        throw EmptySplitError("empty split: sizes (" + std::to_string(n_train) + ", " +
                              std::to_string(n_valid) + ", " + std::to_string(n_test) + ")");

    std::span<const std::size_t> all(perm);
    return Splits{take_rows(data, all.subspan(0, n_train)),
                  take_rows(data, all.subspan(n_train, n_valid)),
                  take_rows(data, all.subspan(n_train + n_valid, n_test))};
}

std::pair<Dataset, std::vector<Dataset>> standardize(const Dataset& train,
                                                     const std::vector<Dataset>& others) {
    if (train.size() == 0) throw std::invalid_argument("standardize: empty training set");

    const std::size_t m = train.size();
    const std::size_t d = train.dim();
    std::vector<FeatureStats> stats(d);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) sum += train.features(i, j);
        const double mu = sum / double(m);
        double sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double dlt = train.features(i, j) - mu;
            sq += dlt * dlt;
        }
        stats[j] = {mu, std::sqrt(sq / double(m))};
    }

    auto apply = [&](const Dataset& src) {
        Dataset out = src;
        for (std::size_t j = 0; j < d; ++j) {
            const double div = std_divisor(stats[j].stddev);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.features(i, j) = (out.features(i, j) - stats[j].mean) / div;
        }
        out.standardization = stats;
        return out;
    };

    std::vector<Dataset> mapped;
    mapped.reserve(others.size());
    for (const Dataset& ds : others) mapped.push_back(apply(ds));
    return {apply(train), std::move(mapped)};
}

Dataset unstandardize(const Dataset& data) {
    if (!data.standardization) return data;
    Dataset out = data;
    const auto& stats = *data.standardization;
    for (std::size_t j = 0; j < out.dim(); ++j) {
        const double div = std_divisor(stats[j].stddev);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.features(i, j) = out.features(i, j) * div + stats[j].mean;
    }
    out.standardization.reset();
    return out;
}

}  // namespace bgn
