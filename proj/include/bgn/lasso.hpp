#pragma once

#include <span>
#include <vector>

#include "bgn/core.hpp"

namespace bgn {

struct LassoSolution {
    std::vector<double> weights;
    double intercept = 0.0;  // fit but discarded by the trainer
    double lambda = 0.0;
    int nnz = 0;
    bool converged = false;
};

/// Cap on non-zero input weights per hidden neuron (d0*).
struct SparsityTarget {
    int max_nnz = 2;
};

/// Minimizes (1/2m)*RSS + lambda*sum|w_j| with an unpenalized intercept by
/// cyclic coordinate descent with exact soft-threshold updates. Converges when
/// the largest coordinate change in a sweep (intercept included) drops below
/// tol, or gives up after max_sweeps.
LassoSolution fit_lasso(const Matrix& X, std::span<const double> y, double lambda,
                        double tol = 1e-6, int max_sweeps = 10000);

/// Geometric grid of 50 regularization levels from lambda_max =
/// max_j |x_j . (y - mean(y))| / m down to 1e-4 * lambda_max.
std::vector<double> lambda_grid(const Matrix& X, std::span<const double> y);

/// Fits the whole grid (warm-started) and returns the solution of the
/// smallest lambda whose nnz is within target. If that solution is all-zero
/// while smaller-lambda grid points have non-zero support, the non-zero
/// solution with the fewest non-zeros (largest lambda on ties) is returned
/// instead, so the result is all-zero only when y carries no signal.
LassoSolution fit_with_sparsity(const Matrix& X, std::span<const double> y,
                                SparsityTarget target, double tol = 1e-6,
                                int max_sweeps = 10000);

/// (1/2m)*RSS + lambda*sum|w_j|, the quantity coordinate descent minimizes.
double lasso_objective(const Matrix& X, std::span<const double> y,
                       std::span<const double> weights, double intercept, double lambda);

/// Largest KKT stationarity violation of a solution; near zero at an optimum.
double kkt_violation(const Matrix& X, std::span<const double> y, const LassoSolution& sol);

}  // namespace bgn
