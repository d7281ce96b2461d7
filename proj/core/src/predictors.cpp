#include "msa/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msa/errors.hpp"

namespace msa::predictors {
namespace {

void require_rows(const Matrix& z, const Vector& y, const char* what) {
  if (z.rows() != y.size()) {
    std::ostringstream os;
    os << what << ": " << z.rows() << " samples but " << y.size() << " labels";
    throw ValidationError(os.str());
  }
  if (z.rows() == 0) throw ValidationError(std::string(what) + ": no samples");
}

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Vector LinearModel::decision(const Matrix& z) const {
  if (z.cols() != weights.size()) {
    std::ostringstream os;
    os << "LinearModel: expected " << weights.size() << " features, got " << z.cols();
    throw ValidationError(os.str());
  }
  return (z * weights).array() + intercept;
}

Vector LinearModel::predict(const Matrix& z) const {
  Vector s = decision(z);
  if (task == Task::classification) {
    s = s.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  }
  return s;
}

LinearModel fit_ridge(const Matrix& z, const Vector& y, double epsilon) {
  require_rows(z, y, "fit_ridge");
  if (!(epsilon >= 0.0)) throw ValidationError("fit_ridge: epsilon must be >= 0");
  const Eigen::RowVectorXd z_mean = z.colwise().mean();
  const double y_mean = y.mean();
  const Matrix zc = z.rowwise() - z_mean;
  const Vector yc = y.array() - y_mean;

  Matrix gram = zc.transpose() * zc;
  gram.diagonal().array() += epsilon;
  Eigen::LDLT<Matrix> ldlt(gram);
  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const Vector d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || d.size() == 0 || d.minCoeff() <= 1e-13 * scale) {
    throw NumericalError(
        "fit_ridge: singular normal equations; use a ridge penalty epsilon > 0");
  }
  LinearModel model;
  model.weights = ldlt.solve(zc.transpose() * yc);
  model.intercept = y_mean - z_mean.dot(model.weights);
  model.task = Task::regression;
  return model;
}

double logistic_objective(const LinearModel& model, const Matrix& z, const Vector& y,
                          double epsilon) {
  const Vector s = model.decision(z);
  double f = epsilon * model.weights.squaredNorm();
  for (Index i = 0; i < s.size(); ++i) f += softplus(-y[i] * s[i]);
  return f;
}

LinearModel fit_logistic(const Matrix& z, const Vector& y, double epsilon,
                         const LogisticOptions& options) {
  require_rows(z, y, "fit_logistic");
  if (!(epsilon >= 0.0)) throw ValidationError("fit_logistic: epsilon must be >= 0");
  bool has_pos = false;
  bool has_neg = false;
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      has_pos = true;
    } else if (y[i] == -1.0) {
      has_neg = true;
    } else {
      throw ValidationError("fit_logistic: labels must be -1 or +1");
    }
  }
  if (!has_pos || !has_neg) throw ValidationError("fit_logistic: both classes must be present");

  const Index n = z.rows();
  const Index q = z.cols();
  Matrix za(n, q + 1);  // features augmented with the intercept column
  za.leftCols(q) = z;
  za.col(q).setOnes();

  LinearModel model;
  model.weights = Vector::Zero(q);
  model.task = Task::classification;
  Vector theta = Vector::Zero(q + 1);
  Vector penalty = Vector::Constant(q + 1, 2.0 * epsilon);
  penalty[q] = 0.0;

  auto objective = [&](const Vector& t) {
    const Vector s = za * t;
    double f = epsilon * t.head(q).squaredNorm();
    for (Index i = 0; i < n; ++i) f += softplus(-y[i] * s[i]);
    return f;
  };

  // the gradient Z^T r carries rounding of order eps ||Z||, so the tolerance
  // scales with the feature norm
  const double tolerance = options.gradient_tolerance * std::max(1.0, za.norm());
  double f = objective(theta);
  double grad_norm = 0.0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Vector s = za * theta;
    Vector r(n);  // d loss / d score
    Vector w(n);  // d^2 loss / d score^2
    for (Index i = 0; i < n; ++i) {
      r[i] = -y[i] * sigmoid(-y[i] * s[i]);
      w[i] = sigmoid(s[i]) * sigmoid(-s[i]);
    }
    const Vector grad = za.transpose() * r + penalty.cwiseProduct(theta);
    grad_norm = grad.norm();
    if (grad_norm <= tolerance) {
      model.weights = theta.head(q);
      model.intercept = theta[q];
      return model;
    }
    Matrix hess = za.transpose() * w.asDiagonal() * za;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
    const Vector step = -hess.ldlt().solve(grad);
    const double slope = grad.dot(step);
    double t = 1.0;
    Vector candidate = theta + step;
    double f_new = objective(candidate);
    while (f_new > f + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      candidate = theta + t * step;
      f_new = objective(candidate);
    }
    if (f_new > f) break;  // no descent possible at machine precision
    theta = candidate;
    f = f_new;
  }
  // final check after the last update
  const Vector s = za * theta;
  Vector r(n);
  for (Index i = 0; i < n; ++i) r[i] = -y[i] * sigmoid(-y[i] * s[i]);
  grad_norm = (za.transpose() * r + penalty.cwiseProduct(theta)).norm();
  if (grad_norm <= tolerance) {
    model.weights = theta.head(q);
    model.intercept = theta[q];
    return model;
  }
  std::ostringstream os;
  os << "fit_logistic: no convergence (gradient norm " << grad_norm
     << "); separable data needs epsilon > 0";
  throw ConvergenceError(os.str(), Matrix(theta), grad_norm);
}

Matrix rbf_kernel(const Matrix& x, const Matrix& y, double sigma2) {
  if (!(sigma2 > 0.0)) throw ValidationError("rbf_kernel: sigma2 must be > 0");
  if (x.cols() != y.cols()) throw ValidationError("rbf_kernel: feature dimension mismatch");
  Matrix k(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      k(i, j) = std::exp(-(x.row(i) - y.row(j)).squaredNorm() / (2.0 * sigma2));
    }
  }
  return k;
}

Vector solve_kernel_ridge(std::span<const Matrix> kernels, const Vector& y, double ridge) {
  if (kernels.empty()) throw ValidationError("solve_kernel_ridge: no kernel blocks");
  if (!(ridge > 0.0)) throw ValidationError("solve_kernel_ridge: ridge must be > 0");
  const Index n = y.size();
  Matrix sum = Matrix::Zero(n, n);
  for (const Matrix& k : kernels) {
    if (k.rows() != n || k.cols() != n) {
      throw ValidationError("solve_kernel_ridge: kernel block size mismatch");
    }
    sum += k;
  }
  sum.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(sum);
  if (ldlt.info() != Eigen::Success) throw NumericalError("solve_kernel_ridge: factorization failed");
  return ldlt.solve(y);
}

Vector KernelModel::predict(std::span<const Matrix> test_blocks) const {
  if (test_blocks.size() != train_blocks.size()) {
    throw ValidationError("KernelModel: block count mismatch");
  }
  Vector out = Vector::Constant(test_blocks.empty() ? 0 : test_blocks.front().rows(), offset);
  for (std::size_t b = 0; b < test_blocks.size(); ++b) {
    out += rbf_kernel(test_blocks[b], train_blocks[b], sigma2) * alpha;
  }
  return out;
}

KernelModel fit_kernel_ridge(std::vector<Matrix> train_blocks, const Vector& y, double sigma2,
                             double ridge) {
  std::vector<Matrix> kernels;
  kernels.reserve(train_blocks.size());
  for (const Matrix& block : train_blocks) {
    if (block.rows() != y.size()) throw ValidationError("fit_kernel_ridge: size mismatch");
    kernels.push_back(rbf_kernel(block, block, sigma2));
  }
  KernelModel model;
  model.offset = y.mean();
  model.alpha = solve_kernel_ridge(kernels, (y.array() - model.offset).matrix(), ridge);
  model.train_blocks = std::move(train_blocks);
  model.sigma2 = sigma2;
  model.ridge = ridge;
  return model;
}

}  // namespace msa::predictors
