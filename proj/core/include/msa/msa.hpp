#pragma once

// Mixing-model Stiefel Adaptation: joint learning of two Stiefel bases
// (source and target), an optimal transport coupling and a linear predictor
// by alternating exact inner solves with Riemannian Adam steps.

#include <cstdint>
#include <optional>
#include <vector>

#include "msa/errors.hpp"
#include "msa/predictors.hpp"
#include "msa/spd_geometry.hpp"
#include "msa/stiefel.hpp"
#include "msa/transport.hpp"
#include "msa/types.hpp"

namespace msa {

struct MsaConfig {
  Index rank = 3;          ///< q
  double gamma = 1.0;      ///< weight of the metric-learning loss
  double rho = 1.0;        ///< weight of the Grassmann loss
  double epsilon = 1e-2;   ///< ridge / logistic penalty on the weights
  Task task = Task::regression;
  int max_iter = 1000;     ///< outer iterations
  double tolerance = 1e-6; ///< relative decrease of the best loss over `window`
  int window = 10;
  stiefel::AdamParams adam;
  std::uint64_t seed = 0;
  /// Ablation switches inside the metric loss. 1 keeps a term, 0 drops it.
  double ot_weight = 1.0;
  double similarity_weight = 1.0;

  /// Throws ValidationError on q < 1, negative weights, bad iteration counts.
  void validate() const;
};

/// Training data in embedding space.
struct MsaData {
  Matrix source;                 ///< n x d, all labeled
  Vector source_labels;          ///< n
  Matrix target;                 ///< m x d, labeled and unlabeled
  std::vector<Index> labeled;    ///< rows of `target` whose label is known
  Vector target_labels;          ///< labels of `labeled`, same order
  Task task = Task::regression;

  /// Rows of `target` listed in `labeled`.
  Matrix labeled_target() const;
  void validate() const;
};

/// Normalized intra-domain affinity K(y): entries sum to one.
struct AffinityMatrix {
  Matrix k;
  double normalizer = 1.0;  ///< sum of the unnormalized entries
};

/// Gaussian kernel exp(-(y_i - y_j)^2 / 2) for regression, same-class
/// indicator for classification, divided by the sum over all pairs.
AffinityMatrix affinity(const Vector& y, Task task);

/// Per-term values of the objective. `metric` already includes the ablation
/// weights; `total` = supervised + gamma * metric + rho * grassmann.
struct LossTerms {
  double supervised = 0.0;
  double ot = 0.0;
  double similarity = 0.0;
  double metric = 0.0;
  double grassmann = 0.0;
  double total = 0.0;
};

/// Objective with the data-only quantities (affinity Laplacians) precomputed.
/// Bases are plain matrices so that the objective can be probed off the
/// manifold (finite differences).
class Objective {
 public:
  Objective(MsaData data, MsaConfig config);

  const MsaData& data() const { return data_; }
  const MsaConfig& config() const { return config_; }

  double supervised_term(const Matrix& us, const Matrix& ut, const predictors::LinearModel& beta) const;
  double ot_term(const Matrix& us, const Matrix& ut, const ot::TransportPlan& plan) const;
  double similarity_term(const Matrix& us, const Matrix& ut) const;
  double grassmann_term(const Matrix& us, const Matrix& ut) const;

  LossTerms evaluate(const Matrix& us, const Matrix& ut, const predictors::LinearModel& beta,
                     const ot::TransportPlan& plan) const;

  struct Gradient {
    Matrix source;
    Matrix target;
  };
  /// Euclidean gradient of `evaluate(...).total` with beta and plan fixed.
  Gradient gradient(const Matrix& us, const Matrix& ut, const predictors::LinearModel& beta,
                    const ot::TransportPlan& plan) const;

  struct InnerSolution {
    predictors::LinearModel beta;
    ot::TransportPlan plan;
  };
  /// Exact (beta*, pi*) at fixed bases. `warm` lets consecutive solves reuse
  /// the previous transport basis.
  InnerSolution inner_solve(const Matrix& us, const Matrix& ut,
                            ot::NetworkSimplex* warm = nullptr) const;

 private:
  MsaData data_;
  MsaConfig config_;
  Matrix labeled_target_;
  Matrix source_laplacian_;  ///< X_S^T L(K(y_S)) X_S
  Matrix target_laplacian_;  ///< X_Tl^T L(K(y_Tl)) X_Tl
  double source_weight_ = 0.0;
  double target_weight_ = 0.0;
};

double supervised_loss(const stiefel::StiefelPoint& us, const stiefel::StiefelPoint& ut,
                       const predictors::LinearModel& beta, const MsaData& data, double epsilon);

/// OT loss plus the size-weighted similarity losses of both labeled sets.
double metric_loss(const stiefel::StiefelPoint& us, const stiefel::StiefelPoint& ut,
                   const ot::TransportPlan& plan, const MsaData& data);

LossTerms total_loss(const stiefel::StiefelPoint& us, const stiefel::StiefelPoint& ut,
                     const predictors::LinearModel& beta, const ot::TransportPlan& plan,
                     const MsaData& data, const MsaConfig& config);

Objective::InnerSolution inner_solve(const stiefel::StiefelPoint& us,
                                     const stiefel::StiefelPoint& ut, const MsaData& data,
                                     const MsaConfig& config);

struct IterationRecord {
  int iteration = 0;
  LossTerms terms;            ///< L at (U_k, beta*_k, pi*_k)
  double post_step_total = 0; ///< L at (U_{k+1}, beta*_k, pi*_k)
};

struct MsaModel {
  stiefel::StiefelPoint source_basis;
  stiefel::StiefelPoint target_basis;
  predictors::LinearModel predictor;
  ot::TransportPlan plan;
  ot::TransportPlan initial_plan;  ///< plan of the first inner solve
  /// Per-band base means the embeddings were computed at (empty when the
  /// model was fit directly on embeddings).
  std::vector<spd::SpdMatrix> source_means;
  std::vector<spd::SpdMatrix> target_means;
  std::vector<IterationRecord> trace;
  int best_iteration = 0;
  MsaConfig config;
};

/// Thrown when the objective becomes non-finite; carries the trace so far.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, std::vector<IterationRecord> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

/// Shared initial basis: top-q right singular vectors of [X_S; X_Tl].
stiefel::StiefelPoint initial_basis(const MsaData& data, Index rank);

/// Alternating optimization. Returns the iterate with the lowest total loss.
MsaModel fit(const MsaData& data, const MsaConfig& config);

/// beta^T (U^T)^T x + beta_0 per row of `target_embeddings` (sign of it for
/// classification).
Vector predict(const MsaModel& model, const Matrix& target_embeddings);

/// Embeds raw target covariances (one list per band) at the model's stored
/// target means, then predicts.
Vector predict_covariances(const MsaModel& model,
                           const std::vector<std::vector<spd::SpdMatrix>>& bands);

}  // namespace msa
