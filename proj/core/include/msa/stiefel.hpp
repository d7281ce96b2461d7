#pragma once

// Stiefel manifold St(d, q) with the embedded (Euclidean) metric: tangent
// projection, QR retraction, Riemannian Adam, and Grassmann (subspace)
// distances via principal angles.

#include <utility>

#include "msa/types.hpp"

namespace msa::stiefel {

/// A d x q matrix with orthonormal columns.
class StiefelPoint {
 public:
  /// Throws ValidationError when ||U^T U - I||_F exceeds `tolerance` or q > d.
  explicit StiefelPoint(Matrix u, double tolerance = 1e-10);

  /// Orthonormalizes `m` by sign-fixed thin QR.
  static StiefelPoint from_qr(const Matrix& m);

  const Matrix& matrix() const { return u_; }
  Index ambient_dim() const { return u_.rows(); }
  Index rank() const { return u_.cols(); }

 private:
  Matrix u_;
};

/// ||U^T U - I||_F
double orthonormality_residual(const Matrix& u);

/// G - U sym(U^T G): orthogonal projection onto the tangent space at U.
Matrix project_tangent(const StiefelPoint& u, const Matrix& g);

/// qf(U + xi) with diag(R) > 0. Throws NumericalError on rank deficiency.
StiefelPoint retract(const StiefelPoint& u, const Matrix& xi);

struct AdamParams {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Optimizer state of Riemannian Adam for one Stiefel factor. The first moment
/// lives in the tangent space of the current point; the second moment is an
/// entrywise accumulator.
struct AdamState {
  AdamState(Index d, Index q, AdamParams params = {});

  long step = 0;
  Matrix first_moment;
  Matrix second_moment;
  AdamParams params;
};

/// One Riemannian Adam update against a Euclidean gradient. The first moment
/// is carried to the new point by tangent projection.
std::pair<AdamState, StiefelPoint> adam_step(AdamState state, const StiefelPoint& u,
                                              const Matrix& euclidean_gradient);

/// Principal angles between span(U) and span(V), ascending, in [0, pi/2].
Vector principal_angles(const StiefelPoint& u, const StiefelPoint& v);

/// sqrt(sum_i sin^2 theta_i) from the principal angles.
double grassmann_distance(const StiefelPoint& u, const StiefelPoint& v);

/// (1/sqrt 2) ||U U^T - V V^T||_F, evaluated on explicit projectors.
double grassmann_distance_projector(const StiefelPoint& u, const StiefelPoint& v);

}  // namespace msa::stiefel
