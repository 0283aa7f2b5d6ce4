#include "bgn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "bgn/rng.hpp"

namespace bgn {

SplitObjective search_bias(std::span<const double> w, const Matrix& X,
                           std::span<const double> r) {
    if (X.rows != r.size() || w.size() != X.cols)
        throw std::invalid_argument("search_bias: shape mismatch");
    if (X.rows < 2) throw std::invalid_argument("search_bias: need at least 2 examples");
    bool any = false;
    for (double v : w)
        if (v != 0.0) any = true;
    if (!any) throw DegenerateDirectionError("search_bias: all-zero direction");

    const std::size_t m = X.rows;
    std::vector<std::pair<std::size_t, double>> nz;
    for (std::size_t j = 0; j < w.size(); ++j)
        if (w[j] != 0.0) nz.emplace_back(j, w[j]);

    std::vector<double> s(m);
    for (std::size_t i = 0; i < m; ++i) {
        double v = 0.0;
        for (const auto& [j, wj] : nz) v += wj * X(i, j);
        s[i] = v;
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });

    // Prefix sums of the residuals in projection order.
    std::vector<double> cum_r(m + 1, 0.0), cum_r2(m + 1, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double ri = r[order[k]];
        cum_r[k + 1] = cum_r[k] + ri;
        cum_r2[k + 1] = cum_r2[k] + ri * ri;
    }

    SplitObjective best;
    best.value = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t k = 1; k < m; ++k) {
        const double lo = s[order[k - 1]];
        const double hi = s[order[k]];
        if (!(hi > lo)) continue;  // only between distinct projections
        const double nl = double(k), nr = double(m - k);
        const double mean_l = cum_r[k] / nl;
        const double mean_r = (cum_r[m] - cum_r[k]) / nr;
        const double var_l = cum_r2[k] / nl - mean_l * mean_l;
        const double var_r = (cum_r2[m] - cum_r2[k]) / nr - mean_r * mean_r;
        const double value = (nl * var_l + nr * var_r) / double(m);
        const double gap = hi - lo;
        if (value < best.value || (value == best.value && gap > best.margin)) {
            best.value = value;
            best.left_count = k;
            best.right_count = m - k;
            best.margin = gap;
            best.threshold = -(lo + hi) / 2.0;
            found = true;
        }
    }
    if (!found)
        throw DegenerateDirectionError("search_bias: all projections identical, no valid split");
    return best;
}

OutputFit fit_output(std::span<const double> r, std::span<const std::int8_t> side) {
    if (r.size() != side.size()) throw std::invalid_argument("fit_output: shape mismatch");
    double sum_plus = 0.0, sum_minus = 0.0;
    std::size_t n_plus = 0, n_minus = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (side[i] > 0) {
            sum_plus += r[i];
            ++n_plus;
        } else {
            sum_minus += r[i];
            ++n_minus;
        }
    }
    if (n_plus == 0 || n_minus == 0) throw std::invalid_argument("fit_output: empty side");
    OutputFit fit;
    fit.rho_plus = sum_plus / double(n_plus);
    fit.rho_minus = sum_minus / double(n_minus);
    fit.w_out = 0.5 * (fit.rho_plus - fit.rho_minus);
    fit.b_out = 0.5 * (fit.rho_plus + fit.rho_minus);
    return fit;
}

namespace {

std::vector<std::int8_t> side_signs(const Neuron& n, const Matrix& X) {
    std::vector<std::pair<std::size_t, double>> nz;
    for (std::size_t j = 0; j < n.weights.size(); ++j)
        if (n.weights[j] != 0.0) nz.emplace_back(j, n.weights[j]);
    std::vector<std::int8_t> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double s = n.bias;
        for (const auto& [j, wj] : nz) s += wj * X(i, j);
        out[i] = sign_pm(s);
    }
    return out;
}

void subtract_contribution(std::vector<double>& r, std::span<const std::int8_t> side,
                           double w_out, double b_out) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= w_out * double(side[i]) + b_out;
}

void add_contribution(std::vector<double>& r, std::span<const std::int8_t> side, double w_out,
                      double b_out) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += w_out * double(side[i]) + b_out;
}

Matrix map_through(const BinaryLayer& layer, const Matrix& X) {
    Matrix out(X.rows, layer.width());
    for (std::size_t k = 0; k < layer.width(); ++k) {
        const auto side = side_signs(layer.neurons[k], X);
        for (std::size_t i = 0; i < X.rows; ++i) out(i, k) = double(side[i]);
    }
    return out;
}

double sum_terms(const std::vector<double>& terms) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

struct FittedNeuron {
    Neuron neuron;
    OutputFit out;
    SplitObjective split;
    std::size_t plus_count = 0;
    std::size_t minus_count = 0;
};

/// Direction, bias and output fit on the given residuals. Returns false when
/// the direction is degenerate (no non-zero weights or no valid split).
bool fit_neuron(const Matrix& X, std::span<const double> r, const TrainConfig& cfg,
                FittedNeuron& out) {
    const LassoSolution sol =
        fit_with_sparsity(X, r, cfg.sparsity, cfg.lasso_tol, cfg.lasso_max_sweeps);
    if (sol.nnz == 0) return false;
    SplitObjective split;
    try {
        split = search_bias(sol.weights, X, r);
    } catch (const DegenerateDirectionError&) {
        return false;
    }
    out.neuron = Neuron{sol.weights, split.threshold};
    const auto sides = side_signs(out.neuron, X);
    out.out = fit_output(r, sides);
    out.split = split;
    out.plus_count = 0;
    for (auto s : sides)
        if (s > 0) ++out.plus_count;
    out.minus_count = X.rows - out.plus_count;
    return true;
}

}  // namespace

std::string serialize_trace(const TrainTrace& trace) {
    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const TraceRecord& r : trace.records) {
        j["records"].push_back({{"layer", r.layer},
                                {"t", r.t},
                                {"kind", r.kind == TraceKind::Add ? "add" : "replace"},
                                {"accepted", r.accepted},
                                {"train_mse_before", r.train_mse_before},
                                {"train_mse_after", r.train_mse_after},
                                {"rho_plus", r.rho_plus},
                                {"rho_minus", r.rho_minus},
                                {"plus_count", r.plus_count},
                                {"minus_count", r.minus_count},
                                {"w_out", r.w_out},
                                {"b_out", r.b_out},
                                {"margin", r.margin},
                                {"valid_mse", r.valid_mse},
                                {"resid_mean_before", r.resid_mean_before},
                                {"model_mse_after", r.model_mse_after}});
    }
    j["layers"] = nlohmann::json::array();
    for (const LayerSummary& l : trace.layers)
        j["layers"].push_back({{"layer", l.layer},
                               {"width", l.width},
                               {"best_valid_mse", l.best_valid_mse},
                               {"stop_reason", l.stop_reason}});
    j["best_valid_mse"] = trace.best_valid_mse;
    j["best_depth"] = trace.best_depth;
    j["best_width"] = trace.best_width;
    return j.dump(2) + "\n";
}

TrainResult train(const Dataset& train_data, const Dataset& valid_data,
                  const TrainConfig& cfg) {
    if (cfg.max_width < 1 || cfg.max_hidden_layers < 1 || cfg.patience < 1 ||
        cfg.sparsity.max_nnz < 1)
        throw std::invalid_argument("train: all caps must be >= 1");
    if (train_data.size() < 2) throw std::invalid_argument("train: need at least 2 examples");
    if (valid_data.dim() != train_data.dim())
        throw DimensionError("train: validation dimension mismatch");

    const std::vector<double>& y = train_data.labels;
    const std::vector<double>& yv = valid_data.labels;
    Matrix X = train_data.features;
    Matrix Xv = valid_data.features;

    Rng rng(cfg.seed);
    TrainTrace trace;
    std::vector<BinaryLayer> frozen;

    const double inf = std::numeric_limits<double>::infinity();
    double best_valid = inf;
    BannModel best_model;
    bool have_checkpoint = false;

    auto make_model = [&](const std::vector<Neuron>& neurons, const std::vector<double>& out_w,
                          const std::vector<double>& out_terms, double train_mse,
                          double valid_mse) {
        BannModel mdl;
        mdl.hidden_layers = frozen;
        mdl.hidden_layers.push_back(BinaryLayer{neurons});
        mdl.output_weights = out_w;
        mdl.output_bias = sum_terms(out_terms);
        mdl.feature_names = train_data.feature_names;
        mdl.standardization = train_data.standardization;
        mdl.metadata = {cfg.seed, cfg.dataset_name, train_mse, valid_mse};
        return mdl;
    };

    for (int layer_idx = 1; layer_idx <= cfg.max_hidden_layers; ++layer_idx) {
        std::vector<Neuron> neurons;
        std::vector<double> out_w;
        std::vector<double> out_terms;  // per-iteration output bias corrections
        std::vector<double> r = y;      // residuals restart from the raw labels
        std::vector<double> rv = yv;

        double layer_best = inf;
        int no_improve = 0;
        std::string stop_reason = "width_cap";

        while (int(neurons.size()) < cfg.max_width) {
            const double mse_before = mean_sq(r);
            const double resid_mean = mean_of(r);

            FittedNeuron fit;
            if (!fit_neuron(X, r, cfg, fit)) {
                stop_reason = "degenerate";
                break;
            }
            const double decrease =
                (double(fit.plus_count) * fit.out.rho_plus * fit.out.rho_plus +
                 double(fit.minus_count) * fit.out.rho_minus * fit.out.rho_minus) /
                double(X.rows);
            if (!(decrease > 0.0)) {
                stop_reason = "degenerate";  // no split can lower the MSE strictly
                break;
            }

            neurons.push_back(fit.neuron);
            out_w.push_back(fit.out.w_out);
            out_terms.push_back(fit.out.b_out);
            subtract_contribution(r, side_signs(fit.neuron, X), fit.out.w_out, fit.out.b_out);
            subtract_contribution(rv, side_signs(fit.neuron, Xv), fit.out.w_out, fit.out.b_out);

            TraceRecord rec;
            rec.layer = layer_idx;
            rec.t = int(neurons.size());
            rec.kind = TraceKind::Add;
            rec.accepted = true;
            rec.train_mse_before = mse_before;
            rec.train_mse_after = mean_sq(r);
            rec.rho_plus = fit.out.rho_plus;
            rec.rho_minus = fit.out.rho_minus;
            rec.plus_count = fit.plus_count;
            rec.minus_count = fit.minus_count;
            rec.w_out = fit.out.w_out;
            rec.b_out = fit.out.b_out;
            rec.margin = fit.split.margin;
            rec.valid_mse = mean_sq(rv);
            rec.resid_mean_before = resid_mean;
            rec.model_mse_after = rec.train_mse_after;
            trace.records.push_back(rec);

            // Random replacement: remove a random earlier neuron, refit on the
            // widened residuals, keep only a strict improvement. t attempts.
            const int t = int(neurons.size());
            if (cfg.improvement1_enabled && t > 1) {
                for (int attempt = 0; attempt < t; ++attempt) {
                    const auto p = std::size_t(rng.below(std::uint64_t(t)));
                    const double mse_cur = mean_sq(r);

                    const Neuron saved_neuron = neurons[p];
                    const double saved_w = out_w[p];
                    const double saved_term = out_terms[p];
                    const std::vector<double> saved_r = r;
                    const std::vector<double> saved_rv = rv;

                    add_contribution(r, side_signs(neurons[p], X), out_w[p], out_terms[p]);
                    add_contribution(rv, side_signs(neurons[p], Xv), out_w[p], out_terms[p]);

                    TraceRecord rrec;
                    rrec.layer = layer_idx;
                    rrec.t = int(p) + 1;
                    rrec.kind = TraceKind::Replace;
                    rrec.train_mse_before = mean_sq(r);
                    rrec.resid_mean_before = mean_of(r);

                    FittedNeuron refit;
                    if (!fit_neuron(X, r, cfg, refit)) {
                        neurons[p] = saved_neuron;
                        out_w[p] = saved_w;
                        out_terms[p] = saved_term;
                        r = saved_r;
                        rv = saved_rv;
                        rrec.accepted = false;
                        rrec.train_mse_after = mse_cur;
                        rrec.valid_mse = mean_sq(rv);
                        rrec.model_mse_after = mse_cur;
                        trace.records.push_back(rrec);
                        continue;
                    }

                    neurons[p] = refit.neuron;
                    out_w[p] = refit.out.w_out;
                    out_terms[p] = refit.out.b_out;
                    subtract_contribution(r, side_signs(refit.neuron, X), refit.out.w_out,
                                          refit.out.b_out);
                    subtract_contribution(rv, side_signs(refit.neuron, Xv), refit.out.w_out,
                                          refit.out.b_out);
                    const double mse_new = mean_sq(r);

                    rrec.train_mse_after = mse_new;
                    rrec.rho_plus = refit.out.rho_plus;
                    rrec.rho_minus = refit.out.rho_minus;
                    rrec.plus_count = refit.plus_count;
                    rrec.minus_count = refit.minus_count;
                    rrec.w_out = refit.out.w_out;
                    rrec.b_out = refit.out.b_out;
                    rrec.margin = refit.split.margin;

                    if (mse_new < mse_cur) {
                        rrec.accepted = true;
                        rrec.model_mse_after = mse_new;
                    } else {
                        neurons[p] = saved_neuron;
                        out_w[p] = saved_w;
                        out_terms[p] = saved_term;
                        r = saved_r;
                        rv = saved_rv;
                        rrec.accepted = false;
                        rrec.model_mse_after = mse_cur;
                    }
                    rrec.valid_mse = mean_sq(rv);
                    trace.records.push_back(rrec);
                }
            }

            const double vmse = mean_sq(rv);
            if (vmse < best_valid) {
                best_valid = vmse;
                best_model = make_model(neurons, out_w, out_terms, mean_sq(r), vmse);
                have_checkpoint = true;
            }
            if (vmse < layer_best) {
                layer_best = vmse;
                no_improve = 0;
            } else if (++no_improve >= cfg.patience) {
                stop_reason = "patience";
                break;
            }
        }

        trace.layers.push_back(
            {layer_idx, int(neurons.size()), layer_best, stop_reason});

        if (neurons.empty()) break;  // nothing to map deeper layers through
        frozen.push_back(BinaryLayer{neurons});
        if (layer_idx < cfg.max_hidden_layers) {
            X = map_through(frozen.back(), X);
            Xv = map_through(frozen.back(), Xv);
        }
    }

    TrainResult result;
    result.degenerate = !have_checkpoint;
    if (!have_checkpoint) {
        // No neuron could be fit at all: a single empty layer predicting 0.
        frozen.clear();
        best_model = make_model({}, {}, {}, mean_sq(y), mean_sq(yv));
        best_valid = mean_sq(yv);
    }
    result.model = std::move(best_model);
    trace.best_valid_mse = best_valid;
    trace.best_depth = int(result.model.hidden_layers.size());
    trace.best_width = int(result.model.hidden_layers.back().width());
    result.trace = std::move(trace);
    return result;
}

}  // namespace bgn
