#include "bgn/bann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace bgn {

ActivationPattern layer_forward(const BinaryLayer& layer, std::span<const double> x) {
    if (!layer.neurons.empty() && x.size() != layer.input_dim())
        throw DimensionError("layer_forward: input has " + std::to_string(x.size()) +
                             " dims, layer expects " + std::to_string(layer.input_dim()));
    ActivationPattern out;
    out.reserve(layer.neurons.size());
    for (const Neuron& n : layer.neurons) out.push_back(sign_pm(n.pre_activation(x)));
    return out;
}

std::vector<double> BannModel::standardized(std::span<const double> x) const {
    std::vector<double> z(x.begin(), x.end());
    if (standardization) {
        const auto& stats = *standardization;
        if (x.size() != stats.size())
            throw DimensionError("input has " + std::to_string(x.size()) +
                                 " dims, standardization has " + std::to_string(stats.size()));
        for (std::size_t j = 0; j < z.size(); ++j)
            z[j] = (z[j] - stats[j].mean) / std_divisor(stats[j].stddev);
    }
    return z;
}

double BannModel::predict_std(std::span<const double> x) const {
    if (hidden_layers.empty() || hidden_layers.front().neurons.empty()) return output_bias;
    if (x.size() != input_dim())
        throw DimensionError("predict: input has " + std::to_string(x.size()) +
                             " dims, model expects " + std::to_string(input_dim()));
    std::vector<double> cur(x.begin(), x.end());
    ActivationPattern act;
    for (const BinaryLayer& layer : hidden_layers) {
        act = layer_forward(layer, cur);
        cur.assign(act.begin(), act.end());
    }
    double out = output_bias;
    for (std::size_t k = 0; k < output_weights.size(); ++k)
        out += output_weights[k] * double(act[k]);
    return out;
}

double BannModel::predict(std::span<const double> x) const {
    if (hidden_layers.empty() || hidden_layers.front().neurons.empty()) return output_bias;
    const std::vector<double> z = standardized(x);
    return predict_std(z);
}

ActivationPattern BannModel::pattern_std(std::span<const double> x,
                                         std::size_t upto_layer) const {
    if (upto_layer < 1 || upto_layer > hidden_layers.size())
        throw std::out_of_range("pattern: layer " + std::to_string(upto_layer) +
                                " out of range 1.." + std::to_string(hidden_layers.size()));
    std::vector<double> cur(x.begin(), x.end());
    ActivationPattern act;
    for (std::size_t k = 0; k < upto_layer; ++k) {
        act = layer_forward(hidden_layers[k], cur);
        cur.assign(act.begin(), act.end());
    }
    return act;
}

ActivationPattern BannModel::pattern(std::span<const double> x, std::size_t upto_layer) const {
    const std::vector<double> z = standardized(x);
    return pattern_std(z, upto_layer);
}

namespace {

/// Appends "sign value" with the sign folded into the joining operator.
void append_signed(std::ostream& os, bool first, double value, const std::string& body) {
    if (first)
        os << (value < 0 ? "-" : "") << body;
    else
        os << (value < 0 ? " - " : " + ") << body;
}

struct UnstandardizedNeuron {
    std::vector<double> weights;
    double bias;
};

UnstandardizedNeuron to_original_units(const Neuron& n,
                                       const std::optional<std::vector<FeatureStats>>& stats) {
    UnstandardizedNeuron out{n.weights, n.bias};
    if (stats) {
        for (std::size_t j = 0; j < n.weights.size(); ++j) {
            const double div = std_divisor((*stats)[j].stddev);
            out.weights[j] = n.weights[j] / div;
            out.bias -= n.weights[j] * (*stats)[j].mean / div;
        }
    }
    return out;
}

std::string condition_text(const UnstandardizedNeuron& n,
                           const std::vector<std::string>& names, int digits) {
    // Scale so the largest-|weight| feature gets coefficient exactly 1; the
    // inequality direction flips when that weight is negative.
    std::size_t dominant = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < n.weights.size(); ++j)
        if (std::abs(n.weights[j]) > best) {
            best = std::abs(n.weights[j]);
            dominant = j;
        }
    const double scale = n.weights[dominant];
    if (scale == 0.0) return "0 > 0";  // all-zero neuron; never produced by training

    std::ostringstream os;
    bool first = true;
    for (std::size_t j = 0; j < n.weights.size(); ++j) {
        if (n.weights[j] == 0.0) continue;
        const double c = n.weights[j] / scale;
        const std::string name = j < names.size() ? names[j] : "x" + std::to_string(j);
        std::string body = name;
        if (std::abs(c) != 1.0) body = format_sig(std::abs(c), digits) + "*" + name;
        append_signed(os, first, c, body);
        first = false;
    }
    const double threshold = -n.bias / scale;
    os << (scale > 0 ? " > " : " < ") << format_sig(threshold, digits);
    return os.str();
}

std::string layered_dump(const BannModel& model, int digits) {
    std::ostringstream os;
    os << "B: " << model.input_dim() << " inputs";
    for (const auto& layer : model.hidden_layers) os << " -> " << layer.width();
    os << " -> 1 output\n";
    for (std::size_t k = 0; k < model.hidden_layers.size(); ++k) {
        os << "layer " << (k + 1) << ":\n";
        const auto& layer = model.hidden_layers[k];
        for (std::size_t i = 0; i < layer.neurons.size(); ++i) {
            const Neuron& n = layer.neurons[i];
            os << "  h" << (k + 1) << "_" << (i + 1) << " = sgn(";
            bool first = true;
            for (std::size_t j = 0; j < n.weights.size(); ++j) {
                if (n.weights[j] == 0.0) continue;
                const std::string name = k == 0 && j < model.feature_names.size()
                                             ? model.feature_names[j]
                                             : "h" + std::to_string(k) + "_" + std::to_string(j + 1);
                append_signed(os, first, n.weights[j],
                              format_sig(std::abs(n.weights[j]), digits) + "*" + name);
                first = false;
            }
            append_signed(os, first, n.bias, format_sig(std::abs(n.bias), digits));
            os << ")\n";
        }
    }
    os << "output = ";
    bool first = true;
    const std::size_t last = model.hidden_layers.size();
    for (std::size_t i = 0; i < model.output_weights.size(); ++i) {
        append_signed(os, first, model.output_weights[i],
                      format_sig(std::abs(model.output_weights[i]), digits) + "*h" +
                          std::to_string(last) + "_" + std::to_string(i + 1));
        first = false;
    }
    append_signed(os, first, model.output_bias,
                  format_sig(std::abs(model.output_bias), digits));
    os << "\n";
    return os.str();
}

}  // namespace

std::string render_equation(const BannModel& model, int digits) {
    if (model.hidden_layers.size() != 1) return layered_dump(model, digits);
    const BinaryLayer& layer = model.hidden_layers.front();

    // w * sgn(z) = 2w * 1{z > 0} - w: per-neuron constants fold into the base.
    double base = model.output_bias;
    for (double w : model.output_weights) base -= w;

    std::vector<std::size_t> order(layer.width());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(model.output_weights[a]) > std::abs(model.output_weights[b]);
    });

    std::vector<bool> retained(model.feature_names.size(), false);
    for (const Neuron& n : layer.neurons)
        for (std::size_t j = 0; j < n.weights.size(); ++j)
            if (n.weights[j] != 0.0 && j < retained.size()) retained[j] = true;

    std::ostringstream os;
    os << "B(";
    bool first = true;
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
        if (!retained[j]) continue;
        if (!first) os << ", ";
        os << model.feature_names[j];
        first = false;
    }
    os << ") =\n      " << format_sig(base, digits) << "\n";

    for (std::size_t idx : order) {
        const double c = 2.0 * model.output_weights[idx];
        const UnstandardizedNeuron n =
            to_original_units(layer.neurons[idx], model.standardization);
        os << (c < 0 ? "    - " : "    + ") << format_sig(std::abs(c), digits) << " * 1{"
           << condition_text(n, model.feature_names, digits) << "}\n";
    }
    return os.str();
}

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key))
        throw ModelFormatError("model file: missing field \"" + path + key + "\"");
    return obj.at(key);
}

double require_number(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number())
        throw ModelFormatError("model file: field \"" + path + key + "\" must be a number");
    return v.get<double>();
}

}  // namespace

std::string serialize(const BannModel& model) {
    json j;
    j["format_version"] = 1;
    j["feature_names"] = model.feature_names;
    if (model.standardization) {
        json stats = json::array();
        for (const FeatureStats& s : *model.standardization)
            stats.push_back({{"mean", s.mean}, {"std", s.stddev}});
        j["standardization"] = stats;
    } else {
        j["standardization"] = nullptr;
    }
    json layers = json::array();
    for (const BinaryLayer& layer : model.hidden_layers) {
        json jl = json::array();
        for (const Neuron& n : layer.neurons)
            jl.push_back({{"weights", n.weights}, {"bias", n.bias}});
        layers.push_back(jl);
    }
    j["hidden_layers"] = layers;
    j["output_weights"] = model.output_weights;
    j["output_bias"] = model.output_bias;
    j["metadata"] = {{"seed", model.metadata.seed},
                     {"dataset_name", model.metadata.dataset_name},
                     {"train_mse", model.metadata.train_mse},
                     {"valid_mse", model.metadata.valid_mse}};
    return j.dump(2) + "\n";
}

BannModel deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelFormatError(std::string("model file: invalid JSON: ") + e.what());
    }

    const json& version = require(j, "format_version", "");
    if (!version.is_number_integer() || version.get<int>() != 1)
        throw ModelFormatError("model file: unsupported format_version " + version.dump() +
                               " (supported: 1)");

    BannModel model;
    const json& names = require(j, "feature_names", "");
    if (!names.is_array())
        throw ModelFormatError("model file: field \"feature_names\" must be an array");
    for (const auto& n : names) model.feature_names.push_back(n.get<std::string>());

    const json& stats = require(j, "standardization", "");
    if (!stats.is_null()) {
        if (!stats.is_array())
            throw ModelFormatError("model file: field \"standardization\" must be an array or null");
        std::vector<FeatureStats> fs;
        for (std::size_t k = 0; k < stats.size(); ++k) {
            const std::string path = "standardization[" + std::to_string(k) + "].";
            fs.push_back({require_number(stats[k], "mean", path),
                          require_number(stats[k], "std", path)});
        }
        if (fs.size() != model.feature_names.size())
            throw ModelFormatError("model file: standardization has " +
                                   std::to_string(fs.size()) + " entries, expected " +
                                   std::to_string(model.feature_names.size()));
        model.standardization = std::move(fs);
    }

    const json& layers = require(j, "hidden_layers", "");
    if (!layers.is_array() || layers.empty())
        throw ModelFormatError("model file: field \"hidden_layers\" must be a non-empty array");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const json& jl = layers[k];
        if (!jl.is_array())
            throw ModelFormatError("model file: field \"hidden_layers[" + std::to_string(k) +
                                   "]\" must be an array");
        BinaryLayer layer;
        for (std::size_t i = 0; i < jl.size(); ++i) {
            const std::string path =
                "hidden_layers[" + std::to_string(k) + "][" + std::to_string(i) + "].";
            const json& w = require(jl[i], "weights", path);
            if (!w.is_array())
                throw ModelFormatError("model file: field \"" + path + "weights\" must be an array");
            Neuron n;
            n.weights = w.get<std::vector<double>>();
            n.bias = require_number(jl[i], "bias", path);
            layer.neurons.push_back(std::move(n));
        }
        model.hidden_layers.push_back(std::move(layer));
    }

    const json& ow = require(j, "output_weights", "");
    if (!ow.is_array())
        throw ModelFormatError("model file: field \"output_weights\" must be an array");
    model.output_weights = ow.get<std::vector<double>>();
    model.output_bias = require_number(j, "output_bias", "");

    const json& meta = require(j, "metadata", "");
    model.metadata.seed = require(meta, "seed", "metadata.").get<std::uint64_t>();
    model.metadata.dataset_name = require(meta, "dataset_name", "metadata.").get<std::string>();
    model.metadata.train_mse = require_number(meta, "train_mse", "metadata.");
    model.metadata.valid_mse = require_number(meta, "valid_mse", "metadata.");

    // Dimension chain: within-layer agreement, layer-to-layer sizes, output width.
    for (std::size_t k = 0; k < model.hidden_layers.size(); ++k) {
        const auto& neurons = model.hidden_layers[k].neurons;
        for (std::size_t i = 1; i < neurons.size(); ++i)
            if (neurons[i].weights.size() != neurons[0].weights.size())
                throw ModelFormatError("model file: hidden_layers[" + std::to_string(k) +
                                       "] neurons disagree on input dimension");
        if (k > 0 && !neurons.empty() &&
            neurons[0].weights.size() != model.hidden_layers[k - 1].width())
            throw ModelFormatError("model file: hidden_layers[" + std::to_string(k) +
                                   "] input dimension does not match previous width");
    }
    if (model.output_weights.size() != model.hidden_layers.back().width())
        throw ModelFormatError("model file: output_weights size " +
                               std::to_string(model.output_weights.size()) +
                               " does not match last hidden width " +
                               std::to_string(model.hidden_layers.back().width()));
    return model;
}

}  // namespace bgn
