#include "msa/stiefel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "msa/errors.hpp"

namespace msa::stiefel {
namespace {

void require_shape(const Matrix& a, Index rows, Index cols, const char* what) {
  if (a.rows() != rows || a.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << a.rows() << "x"
       << a.cols();
    throw ValidationError(os.str());
  }
}

Matrix sign_fixed_qr(const Matrix& m) {
  const Index d = m.rows();
  const Index q = m.cols();
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q_thin = qr.householderQ() * Matrix::Identity(d, q);
  const Matrix& r = qr.matrixQR();
  const double scale = std::max(m.norm(), 1e-300);
  for (Index j = 0; j < q; ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale) {
      throw NumericalError("retract: rank-deficient step (U + xi is not full column rank)");
    }
    if (r(j, j) < 0.0) q_thin.col(j) = -q_thin.col(j);
  }
  return q_thin;
}

}  // namespace

double orthonormality_residual(const Matrix& u) {
  return (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm();
}

StiefelPoint::StiefelPoint(Matrix u, double tolerance) : u_(std::move(u)) {
  if (u_.cols() == 0 || u_.cols() > u_.rows()) {
    throw ValidationError("StiefelPoint: need 1 <= q <= d");
  }
  const double residual = orthonormality_residual(u_);
  if (!(residual <= tolerance)) {
    std::ostringstream os;
    os << "StiefelPoint: columns are not orthonormal (residual " << residual << ")";
    throw ValidationError(os.str());
  }
}

StiefelPoint StiefelPoint::from_qr(const Matrix& m) {
  if (m.cols() == 0 || m.cols() > m.rows()) {
    throw ValidationError("StiefelPoint: need 1 <= q <= d");
  }
  return StiefelPoint(sign_fixed_qr(m));
}

Matrix project_tangent(const StiefelPoint& u, const Matrix& g) {
  const Matrix& x = u.matrix();
  require_shape(g, x.rows(), x.cols(), "project_tangent");
  const Matrix xtg = x.transpose() * g;
  return g - x * (0.5 * (xtg + xtg.transpose()));
}

StiefelPoint retract(const StiefelPoint& u, const Matrix& xi) {
  require_shape(xi, u.ambient_dim(), u.rank(), "retract");
  return StiefelPoint(sign_fixed_qr(u.matrix() + xi));
}

AdamState::AdamState(Index d, Index q, AdamParams p)
    : first_moment(Matrix::Zero(d, q)), second_moment(Matrix::Zero(d, q)), params(p) {}

std::pair<AdamState, StiefelPoint> adam_step(AdamState state, const StiefelPoint& u,
                                              const Matrix& euclidean_gradient) {
  require_shape(euclidean_gradient, u.ambient_dim(), u.rank(), "adam_step");
  require_shape(state.first_moment, u.ambient_dim(), u.rank(), "adam_step (state)");
  if (!euclidean_gradient.allFinite()) {
    throw NumericalError("adam_step: non-finite gradient");
  }
  const AdamParams& p = state.params;
  const Matrix rgrad = project_tangent(u, euclidean_gradient);

  state.step += 1;
  state.first_moment = p.beta1 * state.first_moment + (1.0 - p.beta1) * rgrad;
  state.second_moment =
      p.beta2 * state.second_moment + (1.0 - p.beta2) * rgrad.cwiseAbs2();

  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(p.beta1, t);
  const double c2 = 1.0 - std::pow(p.beta2, t);
  const Matrix direction =
      -p.lr * (state.first_moment / c1).array() /
      ((state.second_moment / c2).array().sqrt() + p.eps);

  if (direction.isZero(0.0)) return {std::move(state), u};

  StiefelPoint next = retract(u, project_tangent(u, direction));
  state.first_moment = project_tangent(next, state.first_moment);
  if (orthonormality_residual(next.matrix()) > 1e-8) {
    next = StiefelPoint::from_qr(next.matrix());
  }
  return {std::move(state), std::move(next)};
}

Vector principal_angles(const StiefelPoint& u, const StiefelPoint& v) {
  require_shape(v.matrix(), u.ambient_dim(), u.rank(), "principal_angles");
  const Matrix& a = u.matrix();
  const Matrix& b = v.matrix();
  const Matrix atb = a.transpose() * b;
  // cosines from U^T V, sines from the part of V outside span(U)
  Eigen::JacobiSVD<Matrix> cos_svd(atb);
  Eigen::JacobiSVD<Matrix> sin_svd(b - a * atb);
  Vector cosines = cos_svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);
  Vector sines = sin_svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);
  const Index q = u.rank();
  Vector angles(q);
  // cosines are descending, sines descending too: pair largest cosine with
  // smallest sine
  for (Index i = 0; i < q; ++i) {
    const double c = cosines[i];
    const double s = sines[q - 1 - i];
    angles[i] = std::atan2(s, c);
  }
  std::sort(angles.begin(), angles.end());
  return angles.cwiseMax(0.0).cwiseMin(std::numbers::pi / 2);
}

double grassmann_distance(const StiefelPoint& u, const StiefelPoint& v) {
  return std::sqrt(principal_angles(u, v).array().sin().square().sum());
}

double grassmann_distance_projector(const StiefelPoint& u, const StiefelPoint& v) {
  require_shape(v.matrix(), u.ambient_dim(), u.rank(), "grassmann_distance");
  const Matrix diff =
      u.matrix() * u.matrix().transpose() - v.matrix() * v.matrix().transpose();
  return diff.norm() / std::numbers::sqrt2;
}

}  // namespace msa::stiefel
