#include "bgn/lasso.hpp"

#include <algorithm>
#include <cmath>

namespace bgn {

namespace {

struct ColMajor {
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<double> cols;  // d columns of length m
    std::vector<double> col_sq_mean;

    explicit ColMajor(const Matrix& X) : m(X.rows), d(X.cols), cols(X.rows * X.cols) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) cols[j * m + i] = X(i, j);
        col_sq_mean.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            const double* col = &cols[j * m];
            for (std::size_t i = 0; i < m; ++i) s += col[i] * col[i];
            col_sq_mean[j] = s / double(m);
        }
    }
    const double* col(std::size_t j) const { return &cols[j * m]; }
};

double soft_threshold(double c, double lambda) {
    if (c > lambda) return c - lambda;
    if (c < -lambda) return c + lambda;
    return 0.0;
}

void check_finite(const Matrix& X, std::span<const double> y) {
    for (double v : X.data)
        if (!std::isfinite(v)) throw std::invalid_argument("fit_lasso: non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("fit_lasso: non-finite label value");
}

/// One coordinate-descent fit, warm-started from sol. residual must equal
/// y - intercept - X w on entry and is kept in sync.
void cd_fit(const ColMajor& X, std::span<const double> y, double lambda, double tol,
            int max_sweeps, LassoSolution& sol, std::vector<double>& residual) {
    const std::size_t m = X.m;
    sol.lambda = lambda;
    sol.converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;

        double shift = 0.0;
        for (std::size_t i = 0; i < m; ++i) shift += residual[i];
        shift /= double(m);
        if (shift != 0.0) {
            sol.intercept += shift;
            for (std::size_t i = 0; i < m; ++i) residual[i] -= shift;
            max_change = std::abs(shift);
        }

        for (std::size_t j = 0; j < X.d; ++j) {
            const double a = X.col_sq_mean[j];
            if (a < 1e-300) continue;  // constant-zero column
            const double* col = X.col(j);
            double dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) dot += col[i] * residual[i];
            const double c = dot / double(m) + a * sol.weights[j];
            const double w_new = soft_threshold(c, lambda) / a;
            const double delta = w_new - sol.weights[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < m; ++i) residual[i] -= delta * col[i];
                sol.weights[j] = w_new;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < tol) {
            sol.converged = true;
            break;
        }
    }
    sol.nnz = 0;
    for (double w : sol.weights)
        if (w != 0.0) ++sol.nnz;
}

std::vector<double> grid_from(const ColMajor& X, std::span<const double> y) {
    const std::size_t m = X.m;
    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= double(m);

    double lambda_max = 0.0;
    for (std::size_t j = 0; j < X.d; ++j) {
        const double* col = X.col(j);
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) dot += col[i] * (y[i] - y_mean);
        lambda_max = std::max(lambda_max, std::abs(dot) / double(m));
    }
    if (lambda_max <= 0.0) return {0.0};

    constexpr int kPoints = 50;
    constexpr double kRatio = 1e-4;  // lambda_min / lambda_max
    std::vector<double> grid(kPoints);
    for (int k = 0; k < kPoints; ++k)
        grid[k] = lambda_max * std::pow(kRatio, double(k) / double(kPoints - 1));
    return grid;
}

}  // namespace

LassoSolution fit_lasso(const Matrix& X, std::span<const double> y, double lambda, double tol,
                        int max_sweeps) {
    if (X.rows == 0 || X.rows != y.size())
        throw std::invalid_argument("fit_lasso: shape mismatch");
    if (lambda < 0.0) throw std::invalid_argument("fit_lasso: negative lambda");
    check_finite(X, y);

    const ColMajor cm(X);
    LassoSolution sol;
    sol.weights.assign(X.cols, 0.0);
    std::vector<double> residual(y.begin(), y.end());
    cd_fit(cm, y, lambda, tol, max_sweeps, sol, residual);
    return sol;
}

std::vector<double> lambda_grid(const Matrix& X, std::span<const double> y) {
    return grid_from(ColMajor(X), y);
}

LassoSolution fit_with_sparsity(const Matrix& X, std::span<const double> y,
                                SparsityTarget target, double tol, int max_sweeps) {
    if (X.rows == 0 || X.rows != y.size())
        throw std::invalid_argument("fit_with_sparsity: shape mismatch");
    check_finite(X, y);

    const ColMajor cm(X);
    const std::vector<double> grid = grid_from(cm, y);

    LassoSolution sol;
    sol.weights.assign(X.cols, 0.0);
    std::vector<double> residual(y.begin(), y.end());

    std::vector<LassoSolution> path;
    path.reserve(grid.size());
    for (double lambda : grid) {
        cd_fit(cm, y, lambda, tol, max_sweeps, sol, residual);
        path.push_back(sol);
    }

    // Smallest lambda whose support fits the target.
    std::size_t selected = 0;
    for (std::size_t k = 0; k < path.size(); ++k)
        if (path[k].nnz <= target.max_nnz) selected = k;

    if (path[selected].nnz == 0) {
        // Prefer the sparsest non-empty support further down the grid.
        std::size_t best = path.size();
        for (std::size_t k = selected + 1; k < path.size(); ++k)
            if (path[k].nnz > 0 && (best == path.size() || path[k].nnz < path[best].nnz))
                best = k;
        if (best != path.size()) return path[best];
    }
    return path[selected];
}

double lasso_objective(const Matrix& X, std::span<const double> y,
                       std::span<const double> weights, double intercept, double lambda) {
    const std::size_t m = X.rows;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double pred = intercept;
        const auto row = X.row(i);
        for (std::size_t j = 0; j < X.cols; ++j) pred += row[j] * weights[j];
        rss += (y[i] - pred) * (y[i] - pred);
    }
    double l1 = 0.0;
    for (double w : weights) l1 += std::abs(w);
    return rss / (2.0 * double(m)) + lambda * l1;
}

double kkt_violation(const Matrix& X, std::span<const double> y, const LassoSolution& sol) {
    const std::size_t m = X.rows;
    const std::size_t d = X.cols;
    std::vector<double> residual(m);
    for (std::size_t i = 0; i < m; ++i) {
        double pred = sol.intercept;
        const auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) pred += row[j] * sol.weights[j];
        residual[i] = y[i] - pred;
    }
    double worst = 0.0;
    {
        double g0 = 0.0;  // intercept stationarity
        for (double r : residual) g0 += r;
        worst = std::abs(g0 / double(m));
    }
    for (std::size_t j = 0; j < d; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) dot += X(i, j) * residual[i];
        const double g = dot / double(m);  // -d/dw_j of (1/2m) RSS, negated back below
        if (sol.weights[j] != 0.0)
            worst = std::max(worst, std::abs(-g + sol.lambda * (sol.weights[j] > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::max(0.0, std::abs(g) - sol.lambda));
    }
    return worst;
}

}  // namespace bgn
