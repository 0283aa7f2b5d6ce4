#include "bgn/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace bgn {

namespace {

constexpr std::size_t kMaxPlayers = 20;

double binom(std::size_t n, std::size_t k) {
    double v = 1.0;
    for (std::size_t i = 0; i < k; ++i) v = v * double(n - i) / double(i + 1);
    return v;
}

std::vector<double> normalized(const std::vector<double>& si) {
    double sum = 0.0;
    for (double v : si) sum += v;
    std::vector<double> out(si.size(), 0.0);
    if (sum > 0.0)
        for (std::size_t i = 0; i < si.size(); ++i) out[i] = si[i] / sum;
    return out;
}

}  // namespace

double coalition_value(const ValueFn& f, std::span<const double> x,
                       const std::vector<std::size_t>& coalition,
                       const std::vector<std::size_t>& players, const Matrix& background) {
    if (background.rows == 0) throw std::invalid_argument("coalition_value: empty background");
    std::vector<bool> present(x.size(), true);  // outside the game = pinned to x
    for (std::size_t j : players) present[j] = false;
    for (std::size_t j : coalition) present[j] = true;

    std::vector<double> composite(x.begin(), x.end());
    double acc = 0.0;
    for (std::size_t z = 0; z < background.rows; ++z) {
        const auto row = background.row(z);
        for (std::size_t j : players) composite[j] = present[j] ? x[j] : row[j];
        acc += f(composite);
    }
    return acc / double(background.rows);
}

ShapExplanation shapley_exact(const ValueFn& f, std::span<const double> x,
                              const Matrix& background,
                              const std::vector<std::size_t>& players) {
    if (background.rows == 0) throw std::invalid_argument("shapley_exact: empty background");
    const std::size_t n = players.size();
    if (n > kMaxPlayers)
        throw std::invalid_argument("shapley_exact: " + std::to_string(n) +
                                    " features exceed the enumeration guard of " +
                                    std::to_string(kMaxPlayers));

    const std::size_t n_masks = std::size_t{1} << n;
    std::vector<double> value(n_masks);
    std::vector<double> composite(x.begin(), x.end());
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double acc = 0.0;
        for (std::size_t z = 0; z < background.rows; ++z) {
            const auto row = background.row(z);
            for (std::size_t i = 0; i < n; ++i)
                composite[players[i]] = (mask >> i) & 1 ? x[players[i]] : row[players[i]];
            acc += f(composite);
        }
        value[mask] = acc / double(background.rows);
    }

    std::vector<double> weight(n == 0 ? 1 : n);
    for (std::size_t s = 0; s < weight.size(); ++s)
        weight[s] = 1.0 / (double(n) * binom(n - 1, s));

    ShapExplanation out;
    out.example.assign(x.begin(), x.end());
    out.phi.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        double phi = 0.0;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const auto s = std::size_t(std::popcount(mask));
            phi += weight[s] * (value[mask | bit] - value[mask]);
        }
        out.phi[players[i]] = phi;
    }
    out.base_value = value[0];
    out.model_output = value[n_masks - 1];
    return out;
}

std::vector<double> shapley_linear(std::span<const double> w, std::span<const double> x,
                                   const Matrix& background) {
    if (background.rows == 0) throw std::invalid_argument("shapley_linear: empty background");
    std::vector<double> phi(w.size(), 0.0);
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] == 0.0) continue;
        double mean = 0.0;
        for (std::size_t z = 0; z < background.rows; ++z) mean += background(z, j);
        mean /= double(background.rows);
        phi[j] = w[j] * (x[j] - mean);
    }
    return phi;
}

namespace {

/// Features mapped into the model's training space.
Matrix to_model_space(const BannModel& model, const Dataset& ds) {
    if (ds.standardization || !model.standardization) return ds.features;
    Matrix out(ds.size(), ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto z = model.standardized(ds.features.row(i));
        std::copy(z.begin(), z.end(), out.row(i).begin());
    }
    return out;
}

Matrix activations(const BannModel& model, const Matrix& std_features, std::size_t upto_layer) {
    Matrix out(std_features.rows, model.hidden_layers[upto_layer - 1].width());
    for (std::size_t i = 0; i < std_features.rows; ++i) {
        const ActivationPattern p = model.pattern_std(std_features.row(i), upto_layer);
        for (std::size_t k = 0; k < p.size(); ++k) out(i, k) = double(p[k]);
    }
    return out;
}

}  // namespace

ImportanceReport importance_report(const BannModel& model, const Dataset& explain_set,
                                   const Dataset& background) {
    if (explain_set.size() == 0)
        throw std::invalid_argument("importance_report: empty explain set");
    if (background.size() == 0)
        throw std::invalid_argument("importance_report: empty background");

    const std::size_t d = explain_set.dim();
    ImportanceReport report;
    report.feature_names = explain_set.feature_names;

    // Predictor-level feature attributions: exact Shapley of the full predictor.
    const bool std_space = explain_set.standardization.has_value();
    const ValueFn f = [&](std::span<const double> x) {
        return std_space ? model.predict_std(x) : model.predict(x);
    };
    std::vector<std::size_t> players(d);
    std::iota(players.begin(), players.end(), std::size_t{0});

    report.feature_si.assign(d, 0.0);
    for (std::size_t i = 0; i < explain_set.size(); ++i) {
        const ShapExplanation ex =
            shapley_exact(f, explain_set.features.row(i), background.features, players);
        for (std::size_t j = 0; j < d; ++j) report.feature_si[j] += std::abs(ex.phi[j]);
    }
    for (double& v : report.feature_si) v /= double(explain_set.size());
    report.feature_rsi = normalized(report.feature_si);

    // Predictor-level neuron attributions: the output layer is linear in the
    // last hidden activations, so the linear closed form is the exact Shapley
    // value at any width.
    const Matrix ex_std = to_model_space(model, explain_set);
    const Matrix bg_std = to_model_space(model, background);
    const std::size_t last = model.depth();
    const Matrix ex_act = activations(model, ex_std, last);
    const Matrix bg_act = activations(model, bg_std, last);
    const std::size_t width = model.hidden_layers.back().width();
    report.neuron_si.assign(width, 0.0);
    for (std::size_t i = 0; i < ex_act.rows; ++i) {
        const auto phi = shapley_linear(model.output_weights, ex_act.row(i), bg_act);
        for (std::size_t k = 0; k < width; ++k) report.neuron_si[k] += std::abs(phi[k]);
    }
    for (double& v : report.neuron_si) v /= double(ex_act.rows);
    report.neuron_rsi = normalized(report.neuron_si);

    // Neuron level: each pre-activation explained over its non-zero inputs.
    Matrix layer_ex = ex_std;
    Matrix layer_bg = bg_std;
    report.per_layer.resize(model.depth());
    for (std::size_t z = 0; z < model.depth(); ++z) {
        const BinaryLayer& layer = model.hidden_layers[z];
        for (const Neuron& neuron : layer.neurons) {
            ImportanceReport::NeuronInputs ni;
            for (std::size_t j = 0; j < neuron.weights.size(); ++j)
                if (neuron.weights[j] != 0.0) ni.input_index.push_back(j);
            ni.si.assign(ni.input_index.size(), 0.0);
            for (std::size_t i = 0; i < layer_ex.rows; ++i) {
                const auto phi = shapley_linear(neuron.weights, layer_ex.row(i), layer_bg);
                for (std::size_t k = 0; k < ni.input_index.size(); ++k)
                    ni.si[k] += std::abs(phi[ni.input_index[k]]);
            }
            for (double& v : ni.si) v /= double(layer_ex.rows);
            ni.rsi = normalized(ni.si);
            report.per_layer[z].push_back(std::move(ni));
        }
        if (z + 1 < model.depth()) {
            layer_ex = activations(model, ex_std, z + 1);
            layer_bg = activations(model, bg_std, z + 1);
        }
    }
    return report;
}

namespace {

std::vector<std::size_t> order_desc(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

int percent(double rsi) { return int(std::lround(rsi * 100.0)); }

}  // namespace

std::string format_report(const ImportanceReport& report, const BannModel& model) {
    std::ostringstream os;
    os << "predictor-level feature importance (SI, rSI):\n";
    for (std::size_t j : order_desc(report.feature_rsi)) {
        const std::string name =
            j < report.feature_names.size() ? report.feature_names[j] : "x" + std::to_string(j);
        os << "  " << name << "  " << format_sig(report.feature_si[j], 6) << "  "
           << format_sig(report.feature_rsi[j], 6) << "\n";
    }
    os << "predictor-level neuron importance (SI, rSI):\n";
    for (std::size_t k : order_desc(report.neuron_rsi))
        os << "  h" << (k + 1) << "  " << format_sig(report.neuron_si[k], 6) << "  "
           << format_sig(report.neuron_rsi[k], 6) << "\n";
    os << "neuron-level input importance (rSI):\n";
    for (std::size_t z = 0; z < report.per_layer.size(); ++z) {
        for (std::size_t k = 0; k < report.per_layer[z].size(); ++k) {
            const auto& ni = report.per_layer[z][k];
            os << "  layer " << (z + 1) << " neuron " << (k + 1) << ":";
            for (std::size_t q = 0; q < ni.input_index.size(); ++q) {
                const std::size_t j = ni.input_index[q];
                const std::string name = z == 0 && j < report.feature_names.size()
                                             ? report.feature_names[j]
                                             : "h" + std::to_string(j + 1);
                os << (q ? ", " : " ") << name << "=" << format_sig(ni.rsi[q], 6);
            }
            os << "\n";
        }
    }
    (void)model;
    return os.str();
}

std::string report_to_dot(const ImportanceReport& report, const BannModel& model) {
    if (model.depth() != 1) return format_report(report, model);
    const BinaryLayer& layer = model.hidden_layers.front();

    std::vector<bool> retained(report.feature_names.size(), false);
    for (const Neuron& n : layer.neurons)
        for (std::size_t j = 0; j < n.weights.size(); ++j)
            if (n.weights[j] != 0.0) retained[j] = true;

    std::ostringstream os;
    os << "digraph bann {\n  rankdir=LR;\n";
    for (std::size_t j : order_desc(report.feature_rsi)) {
        if (!retained[j]) continue;
        os << "  f" << j << " [label=\"" << report.feature_names[j] << "\\n"
           << percent(report.feature_rsi[j]) << "%\"];\n";
    }
    for (std::size_t k : order_desc(report.neuron_rsi))
        os << "  n" << k << " [shape=box, label=\"h" << (k + 1) << "\\n"
           << percent(report.neuron_rsi[k]) << "%\"];\n";
    os << "  out [shape=box, label=\"sum\"];\n";

    // Edge darkness follows the neuron-level rSI; a zero edge stays visible
    // at the lightest stroke.
    for (std::size_t k = 0; k < report.per_layer[0].size(); ++k) {
        const auto& ni = report.per_layer[0][k];
        for (std::size_t q = 0; q < ni.input_index.size(); ++q) {
            const int level = int(std::lround(85.0 * (1.0 - ni.rsi[q])));
            os << "  f" << ni.input_index[q] << " -> n" << k << " [color=\"gray" << level
               << "\"];\n";
        }
    }
    for (std::size_t k = 0; k < layer.width(); ++k) os << "  n" << k << " -> out;\n";
    os << "}\n";
    return os.str();
}

std::string report_to_json(const ImportanceReport& report) {
    nlohmann::json j;
    j["feature_names"] = report.feature_names;
    j["feature_si"] = report.feature_si;
    j["feature_rsi"] = report.feature_rsi;
    j["neuron_si"] = report.neuron_si;
    j["neuron_rsi"] = report.neuron_rsi;
    j["neuron_level"] = nlohmann::json::array();
    for (std::size_t z = 0; z < report.per_layer.size(); ++z) {
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& ni : report.per_layer[z])
            jl.push_back({{"inputs", ni.input_index}, {"si", ni.si}, {"rsi", ni.rsi}});
        j["neuron_level"].push_back(jl);
    }
    return j.dump(2) + "\n";
}

}  // namespace bgn
