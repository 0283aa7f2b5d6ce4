#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bgn/bann.hpp"
#include "bgn/dataset.hpp"
#include "bgn/lasso.hpp"

namespace bgn {

struct TrainConfig {
    int max_width = 1000;
    int max_hidden_layers = 3;
    SparsityTarget sparsity{2};
    int patience = 10;  // non-improving additions tolerated before a layer stops
    std::uint64_t seed = 0;
    bool improvement1_enabled = true;
    double lasso_tol = 1e-6;
    int lasso_max_sweeps = 10000;
    std::string dataset_name;
};

/// Raised when a direction admits no split: all-zero weights or all
/// projections identical.
struct DegenerateDirectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Result of the exact bias search along a fixed direction.
struct SplitObjective {
    double value = 0.0;        // weighted within-side variance of the residuals
    std::size_t left_count = 0;
    std::size_t right_count = 0;
    double margin = 0.0;       // gap between the sorted projections around the cut
    double threshold = 0.0;    // the chosen bias b
};

/// Scans every split between consecutive distinct sorted projections w.x_i,
/// minimizing (|left|/m)Var(left r) + (|right|/m)Var(right r); ties go to the
/// split with the largest margin. Trivial splits (an empty side) are skipped.
SplitObjective search_bias(std::span<const double> w, const Matrix& X,
                           std::span<const double> r);

struct OutputFit {
    double w_out = 0.0;
    double b_out = 0.0;
    double rho_plus = 0.0;
    double rho_minus = 0.0;
};

/// Closed-form least squares for the new output connection: rho+- are the
/// mean residuals per side, w = (rho+ - rho-)/2, b = (rho+ + rho-)/2.
OutputFit fit_output(std::span<const double> r, std::span<const std::int8_t> side);

enum class TraceKind { Add, Replace };

/// One trainer event: a neuron addition or a replacement attempt.
struct TraceRecord {
    int layer = 0;  // 1-based hidden layer
    int t = 0;      // iteration within the layer; replaced slot for Replace
    TraceKind kind = TraceKind::Add;
    bool accepted = false;
    double train_mse_before = 0.0;
    double train_mse_after = 0.0;
    double rho_plus = 0.0;
    double rho_minus = 0.0;
    std::size_t plus_count = 0;
    std::size_t minus_count = 0;
    double w_out = 0.0;
    double b_out = 0.0;
    double margin = 0.0;
    double valid_mse = 0.0;
    double resid_mean_before = 0.0;  // mean of the residuals the neuron was fit on
    double model_mse_after = 0.0;    // training MSE once the event resolved (restores included)
};

struct LayerSummary {
    int layer = 0;
    int width = 0;
    double best_valid_mse = 0.0;
    std::string stop_reason;  // "width_cap" | "patience" | "degenerate"
};

struct TrainTrace {
    std::vector<TraceRecord> records;
    std::vector<LayerSummary> layers;
    double best_valid_mse = 0.0;
    int best_depth = 0;  // hidden layers in the returned checkpoint
    int best_width = 0;  // width of its last hidden layer
};

std::string serialize_trace(const TrainTrace& trace);

struct TrainResult {
    BannModel model;
    TrainTrace trace;
    bool degenerate = false;  // no neuron could be fit at all
};

/// Grows binary layers one neuron at a time on the standardized train split,
/// refining with random replacement when enabled and deepening layer by
/// layer; returns the checkpoint with the best validation MSE seen anywhere.
/// Deterministic given (data, config).
TrainResult train(const Dataset& train_data, const Dataset& valid_data,
                  const TrainConfig& config);

}  // namespace bgn
