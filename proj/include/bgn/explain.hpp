#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bgn/bann.hpp"
#include "bgn/dataset.hpp"

namespace bgn {

using ValueFn = std::function<double(std::span<const double>)>;

/// Interventional coalition value: mean over background rows z of
/// f(composite input taking x on S and z off S). Features outside `players`
/// are pinned to x everywhere.
double coalition_value(const ValueFn& f, std::span<const double> x,
                       const std::vector<std::size_t>& coalition,
                       const std::vector<std::size_t>& players, const Matrix& background);

struct ShapExplanation {
    std::vector<double> example;
    std::vector<double> phi;  // one entry per input feature; zero outside the players
    double base_value = 0.0;  // value of the empty coalition
    double model_output = 0.0;
};

/// Exact Shapley values by full subset enumeration over `players` (at most 20)
/// with memoized coalition values. Satisfies efficiency:
/// sum(phi) + base_value = model_output.
ShapExplanation shapley_exact(const ValueFn& f, std::span<const double> x,
                              const Matrix& background,
                              const std::vector<std::size_t>& players);

/// Exact Shapley values of a linear function w.x + c under the interventional
/// value function: phi_j = w_j * (x_j - mean background_j). Used where the
/// target is linear (output layer over activations, neuron pre-activations),
/// where it coincides with subset enumeration at any width.
std::vector<double> shapley_linear(std::span<const double> w, std::span<const double> x,
                                   const Matrix& background);

/// Mean-|phi| importances (SI) and their normalizations (rSI).
struct ImportanceReport {
    std::vector<std::string> feature_names;

    // Predictor level, per input feature.
    std::vector<double> feature_si;
    std::vector<double> feature_rsi;

    // Predictor level, per neuron of the last hidden layer.
    std::vector<double> neuron_si;
    std::vector<double> neuron_rsi;

    // Neuron level: each hidden neuron's pre-activation explained over its
    // own non-zero input features.
    struct NeuronInputs {
        std::vector<std::size_t> input_index;
        std::vector<double> si;
        std::vector<double> rsi;
    };
    std::vector<std::vector<NeuronInputs>> per_layer;  // [layer][neuron]
};

/// explain_set and background must live in the same space (both raw or both
/// standardized); the model is evaluated accordingly.
ImportanceReport importance_report(const BannModel& model, const Dataset& explain_set,
                                   const Dataset& background);

/// DOT graph for single-hidden-layer models: retained feature and neuron
/// nodes labeled with rSI percentages, edge darkness proportional to the
/// neuron-level rSI. Deeper models fall back to the tabular report.
std::string report_to_dot(const ImportanceReport& report, const BannModel& model);

std::string format_report(const ImportanceReport& report, const BannModel& model);
std::string report_to_json(const ImportanceReport& report);

}  // namespace bgn
