#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgn/core.hpp"
#include "bgn/dataset.hpp"

namespace bgn {

/// sign with the fixed tie rule sign(0) = +1.
inline std::int8_t sign_pm(double v) { return v >= 0.0 ? std::int8_t{1} : std::int8_t{-1}; }

/// One hyperplane: weights plus bias, activated by sign.
struct Neuron {
    std::vector<double> weights;
    double bias = 0.0;

    double pre_activation(std::span<const double> x) const {
        double s = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
        return s;
    }
};

struct BinaryLayer {
    std::vector<Neuron> neurons;

    std::size_t width() const { return neurons.size(); }
    std::size_t input_dim() const { return neurons.empty() ? 0 : neurons[0].weights.size(); }
};

/// Output of a layer composition; entries are -1 or +1.
using ActivationPattern = std::vector<std::int8_t>;

ActivationPattern layer_forward(const BinaryLayer& layer, std::span<const double> x);

struct ModelMetadata {
    std::uint64_t seed = 0;
    std::string dataset_name;
    double train_mse = 0.0;
    double valid_mse = 0.0;
};

/// Stacked binary layers plus a linear output layer. Models are immutable
/// after construction; predict is pure and safe for concurrent use.
///
/// predict and pattern take inputs in original feature units and apply the
/// stored standardization internally; the _std variants take inputs already
/// mapped to the training space.
struct BannModel {
    std::vector<BinaryLayer> hidden_layers;
    std::vector<double> output_weights;
    double output_bias = 0.0;
    std::vector<std::string> feature_names;
    std::optional<std::vector<FeatureStats>> standardization;
    ModelMetadata metadata;

    std::size_t input_dim() const {
        return hidden_layers.empty() ? 0 : hidden_layers.front().input_dim();
    }
    std::size_t depth() const { return hidden_layers.size(); }

    double predict(std::span<const double> x) const;
    double predict_std(std::span<const double> x) const;

    /// Activation pattern of hidden layer k (1-based) for x.
    ActivationPattern pattern(std::span<const double> x, std::size_t upto_layer) const;
    ActivationPattern pattern_std(std::span<const double> x, std::size_t upto_layer) const;

    std::vector<double> standardized(std::span<const double> x) const;
};

/// Renders a single-hidden-layer model as its additive indicator equation,
/// thresholds in original feature units. Deeper models fall back to a plain
/// layered dump. `digits` controls printed significant digits.
std::string render_equation(const BannModel& model, int digits = 6);

struct ModelFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// JSON text round trip; schema documented in the README.
std::string serialize(const BannModel& model);
BannModel deserialize(const std::string& text);

}  // namespace bgn
