#pragma once

// Inner supervised solvers: ridge regression, L2-regularized logistic
// regression and RBF kernel ridge regression.

#include <span>
#include <vector>

#include "msa/types.hpp"

namespace msa::predictors {

/// score(z) = weights^T z + intercept. The intercept is never penalized.
struct LinearModel {
  Vector weights;
  double intercept = 0.0;
  Task task = Task::regression;

  /// Raw scores for each row of `z`.
  Vector decision(const Matrix& z) const;
  /// Scores for regression; sign(score) with sign(0) = +1 for classification.
  Vector predict(const Matrix& z) const;
};

/// Minimizer of sum (y_i - b^T z_i - b0)^2 + epsilon ||b||^2, solved by the
/// normal equations on centered data. Throws NumericalError when the system
/// is singular (only possible for epsilon == 0).
LinearModel fit_ridge(const Matrix& z, const Vector& y, double epsilon);

struct LogisticOptions {
  int max_iter = 100;
  double gradient_tolerance = 1e-8;  ///< relative to max(1, Frobenius norm of [Z 1])
};

/// Minimizer of sum log(1 + exp(-y_i (b^T z_i + b0))) + epsilon ||b||^2 with
/// labels in {-1, +1}, by damped Newton with Armijo backtracking.
LinearModel fit_logistic(const Matrix& z, const Vector& y, double epsilon,
                         const LogisticOptions& options = {});

/// Value of the regularized logistic objective (for tests and diagnostics).
double logistic_objective(const LinearModel& model, const Matrix& z, const Vector& y,
                          double epsilon);

/// K_ij = exp(-||x_i - y_j||^2 / (2 sigma2)).
Matrix rbf_kernel(const Matrix& x, const Matrix& y, double sigma2);

/// alpha = (sum_b K_b + ridge I)^{-1} y.
Vector solve_kernel_ridge(std::span<const Matrix> kernels, const Vector& y, double ridge);

/// Kernel ridge regression on a sum of per-block RBF kernels; each block is
/// a contiguous group of feature columns.
struct KernelModel {
  Vector alpha;
  double offset = 0.0;  ///< training label mean, added back to predictions
  std::vector<Matrix> train_blocks;
  double sigma2 = 1.0;
  double ridge = 1.0;

  /// offset + sum_b K_b(test, train) alpha
  Vector predict(std::span<const Matrix> test_blocks) const;
};

/// Fits on labels centered at their mean.
KernelModel fit_kernel_ridge(std::vector<Matrix> train_blocks, const Vector& y, double sigma2,
                             double ridge);

}  // namespace msa::predictors
