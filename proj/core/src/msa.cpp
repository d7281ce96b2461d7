#include "msa/msa.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "msa/errors.hpp"

namespace msa {
namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// sum of per-sample losses of `scores` against `y`
double sample_loss(const Vector& scores, const Vector& y, Task task) {
  double total = 0.0;
  if (task == Task::regression) return (y - scores).squaredNorm();
  for (Index i = 0; i < y.size(); ++i) total += softplus(-y[i] * scores[i]);
  return total;
}

// derivative of sample_loss with respect to each score
Vector sample_loss_derivative(const Vector& scores, const Vector& y, Task task) {
  if (task == Task::regression) return -2.0 * (y - scores);
  Vector g(y.size());
  for (Index i = 0; i < y.size(); ++i) g[i] = -y[i] * sigmoid(-y[i] * scores[i]);
  return g;
}

// X^T (diag(K 1) - K) X
Matrix laplacian_form(const Matrix& x, const Matrix& k) {
  const Vector degree = k.rowwise().sum();
  return x.transpose() * (degree.asDiagonal() * x) - x.transpose() * (k * x);
}

Vector stacked_labels(const MsaData& data) {
  Vector y(data.source_labels.size() + data.target_labels.size());
  y << data.source_labels, data.target_labels;
  return y;
}

}  // namespace

void MsaConfig::validate() const {
  if (rank < 1) throw ValidationError("MsaConfig: rank must be >= 1");
  if (!(gamma >= 0.0) || !(rho >= 0.0) || !(epsilon >= 0.0)) {
    throw ValidationError("MsaConfig: gamma, rho and epsilon must be >= 0");
  }
  if (!(ot_weight >= 0.0) || !(similarity_weight >= 0.0)) {
    throw ValidationError("MsaConfig: ablation weights must be >= 0");
  }
  if (max_iter < 1 || window < 1) throw ValidationError("MsaConfig: max_iter and window must be >= 1");
  if (!(tolerance >= 0.0)) throw ValidationError("MsaConfig: tolerance must be >= 0");
  if (!(adam.lr > 0.0)) throw ValidationError("MsaConfig: Adam learning rate must be > 0");
}

Matrix MsaData::labeled_target() const {
  Matrix out(static_cast<Index>(labeled.size()), target.cols());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    out.row(static_cast<Index>(i)) = target.row(labeled[i]);
  }
  return out;
}

void MsaData::validate() const {
  if (source.rows() == 0 || target.rows() == 0) throw ValidationError("MsaData: empty domain");
  if (source.cols() != target.cols()) {
    throw ValidationError("MsaData: source and target embedding dimensions differ");
  }
  if (source_labels.size() != source.rows()) {
    throw ValidationError("MsaData: source labels do not match source rows");
  }
  if (static_cast<Index>(labeled.size()) != target_labels.size()) {
    throw ValidationError("MsaData: labeled index list does not match target labels");
  }
  for (Index idx : labeled) {
    if (idx < 0 || idx >= target.rows()) throw ValidationError("MsaData: labeled index out of range");
  }
  if (!source.allFinite() || !target.allFinite() || !source_labels.allFinite() ||
      !target_labels.allFinite()) {
    throw ValidationError("MsaData: non-finite entries");
  }
}

AffinityMatrix affinity(const Vector& y, Task task) {
  const Index n = y.size();
  if (n == 0) throw ValidationError("affinity: empty label vector");
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (task == Task::regression) {
        const double diff = y[i] - y[j];
        k(i, j) = std::exp(-0.5 * diff * diff);
      } else {
        k(i, j) = y[i] == y[j] ? 1.0 : 0.0;
      }
    }
  }
  const double total = k.sum();
  return {k / total, total};
}

Objective::Objective(MsaData data, MsaConfig config)
    : data_(std::move(data)), config_(std::move(config)) {
  data_.validate();
  config_.validate();
  if (config_.rank > data_.source.cols()) {
    throw ValidationError("MsaConfig: rank exceeds the embedding dimension");
  }
  labeled_target_ = data_.labeled_target();
  const double n = static_cast<double>(data_.source.rows());
  const double mk = static_cast<double>(data_.labeled.size());
  source_weight_ = n / (n + mk);
  target_weight_ = mk / (n + mk);
  source_laplacian_ =
      laplacian_form(data_.source, affinity(data_.source_labels, data_.task).k);
  if (data_.labeled.empty()) {
    target_laplacian_ = Matrix::Zero(data_.target.cols(), data_.target.cols());
  } else {
    target_laplacian_ =
        laplacian_form(labeled_target_, affinity(data_.target_labels, data_.task).k);
  }
}

double Objective::supervised_term(const Matrix& us, const Matrix& ut,
                                  const predictors::LinearModel& beta) const {
  const Vector src = (data_.source * us) * beta.weights;
  double total = sample_loss(src.array() + beta.intercept, data_.source_labels, data_.task);
  if (!data_.labeled.empty()) {
    const Vector tgt = (labeled_target_ * ut) * beta.weights;
    total += sample_loss(tgt.array() + beta.intercept, data_.target_labels, data_.task);
  }
  return total + config_.epsilon * beta.weights.squaredNorm();
}

double Objective::ot_term(const Matrix& us, const Matrix& ut, const ot::TransportPlan& plan) const {
  const Matrix zs = data_.source * us;
  const Matrix zt = data_.target * ut;
  const Matrix& pi = plan.matrix();
  // sum_ij pi_ij ||zs_i - zt_j||^2 expanded over the marginals
  const Vector row = pi.rowwise().sum();
  const Vector col = pi.colwise().sum().transpose();
  return row.dot(zs.rowwise().squaredNorm()) + col.dot(zt.rowwise().squaredNorm()) -
         2.0 * (zs.transpose() * pi * zt).trace();
}

double Objective::similarity_term(const Matrix& us, const Matrix& ut) const {
  // sum_ij K_ij ||U^T (x_i - x_j)||^2 = 2 tr(U^T X^T L X U)
  return 2.0 * source_weight_ * (us.transpose() * source_laplacian_ * us).trace() +
         2.0 * target_weight_ * (ut.transpose() * target_laplacian_ * ut).trace();
}

double Objective::grassmann_term(const Matrix& us, const Matrix& ut) const {
  const double ss = (us.transpose() * us).squaredNorm();
  const double tt = (ut.transpose() * ut).squaredNorm();
  const double st = (us.transpose() * ut).squaredNorm();
  double sq = ss + tt - 2.0 * st;
  if (sq < 1e-6 * (ss + tt)) {
    // cancellation-free evaluation for nearly equal subspaces
    sq = (us * us.transpose() - ut * ut.transpose()).squaredNorm();
  }
  return std::sqrt(std::max(sq, 0.0) / 2.0);
}

LossTerms Objective::evaluate(const Matrix& us, const Matrix& ut, const predictors::LinearModel& beta,
                              const ot::TransportPlan& plan) const {
  LossTerms terms;
  terms.supervised = supervised_term(us, ut, beta);
  terms.ot = ot_term(us, ut, plan);
  terms.similarity = similarity_term(us, ut);
  terms.metric = config_.ot_weight * terms.ot + config_.similarity_weight * terms.similarity;
  terms.grassmann = grassmann_term(us, ut);
  terms.total = terms.supervised + config_.gamma * terms.metric + config_.rho * terms.grassmann;
  return terms;
}

Objective::Gradient Objective::gradient(const Matrix& us, const Matrix& ut,
                                        const predictors::LinearModel& beta,
                                        const ot::TransportPlan& plan) const {
  const Matrix zs = data_.source * us;
  const Matrix zt = data_.target * ut;

  // supervised
  const Vector src_scores = (zs * beta.weights).array() + beta.intercept;
  const Vector g_src = sample_loss_derivative(src_scores, data_.source_labels, data_.task);
  Matrix grad_s = data_.source.transpose() * g_src * beta.weights.transpose();
  Matrix grad_t = Matrix::Zero(ut.rows(), ut.cols());
  if (!data_.labeled.empty()) {
    const Vector tgt_scores = ((labeled_target_ * ut) * beta.weights).array() + beta.intercept;
    const Vector g_tgt = sample_loss_derivative(tgt_scores, data_.target_labels, data_.task);
    grad_t += labeled_target_.transpose() * g_tgt * beta.weights.transpose();
  }

  // metric: OT part
  const double ot_scale = config_.gamma * config_.ot_weight;
  if (ot_scale != 0.0) {
    const Matrix& pi = plan.matrix();
    const Vector row = pi.rowwise().sum();
    const Vector col = pi.colwise().sum().transpose();
    grad_s += 2.0 * ot_scale *
              (data_.source.transpose() * (row.asDiagonal() * zs - pi * zt));
    grad_t += 2.0 * ot_scale *
              (data_.target.transpose() * (col.asDiagonal() * zt - pi.transpose() * zs));
  }

  // metric: similarity part
  const double sim_scale = config_.gamma * config_.similarity_weight;
  if (sim_scale != 0.0) {
    grad_s += 4.0 * sim_scale * source_weight_ * (source_laplacian_ * us);
    grad_t += 4.0 * sim_scale * target_weight_ * (target_laplacian_ * ut);
  }

  // Grassmann: (1/sqrt2) ||P - Q||_F with P = Us Us^T, Q = Ut Ut^T
  if (config_.rho != 0.0) {
    const double dist = grassmann_term(us, ut);
    if (dist > 0.0) {
      const double norm_pq = std::numbers::sqrt2 * dist;
      const Matrix d_us = us * (us.transpose() * us) - ut * (ut.transpose() * us);
      const Matrix d_ut = us * (us.transpose() * ut) - ut * (ut.transpose() * ut);
      grad_s += config_.rho * std::numbers::sqrt2 * d_us / norm_pq;
      grad_t -= config_.rho * std::numbers::sqrt2 * d_ut / norm_pq;
    }
  }
  return {std::move(grad_s), std::move(grad_t)};
}

Objective::InnerSolution Objective::inner_solve(const Matrix& us, const Matrix& ut,
                                                ot::NetworkSimplex* warm) const {
  const Matrix zs = data_.source * us;
  const Matrix zt = data_.target * ut;

  Matrix features(zs.rows() + static_cast<Index>(data_.labeled.size()), zs.cols());
  features.topRows(zs.rows()) = zs;
  if (!data_.labeled.empty()) features.bottomRows(labeled_target_.rows()) = labeled_target_ * ut;
  const Vector labels = stacked_labels(data_);

  predictors::LinearModel beta = data_.task == Task::regression
                                  ? predictors::fit_ridge(features, labels, config_.epsilon)
                                  : predictors::fit_logistic(features, labels, config_.epsilon);

  const Matrix cost = ot::cost_matrix(zs, zt);
  ot::TransportPlan plan = warm ? warm->solve(cost) : ot::solve_ot(cost);
  return {std::move(beta), std::move(plan)};
}

double supervised_loss(const stiefel::StiefelPoint& us, const stiefel::StiefelPoint& ut,
                       const predictors::LinearModel& beta, const MsaData& data, double epsilon) {
  if (beta.task != data.task) throw ValidationError("supervised_loss: task mismatch between model and data");
  MsaConfig config;
  config.rank = us.rank();
  config.epsilon = epsilon;
  config.task = data.task;
  return Objective(data, config).supervised_term(us.matrix(), ut.matrix(), beta);
}

double metric_loss(const stiefel::StiefelPoint& us, const stiefel::StiefelPoint& ut,
                   const ot::TransportPlan& plan, const MsaData& data) {
  MsaConfig config;
  config.rank = us.rank();
  config.task = data.task;
  const Objective objective(data, config);
  return objective.ot_term(us.matrix(), ut.matrix(), plan) +
         objective.similarity_term(us.matrix(), ut.matrix());
}

LossTerms total_loss(const stiefel::StiefelPoint& us, const stiefel::StiefelPoint& ut,
                     const predictors::LinearModel& beta, const ot::TransportPlan& plan,
                     const MsaData& data, const MsaConfig& config) {
  if (beta.task != data.task) throw ValidationError("total_loss: task mismatch between model and data");
  return Objective(data, config).evaluate(us.matrix(), ut.matrix(), beta, plan);
}

Objective::InnerSolution inner_solve(const stiefel::StiefelPoint& us,
                                     const stiefel::StiefelPoint& ut, const MsaData& data,
                                     const MsaConfig& config) {
  return Objective(data, config).inner_solve(us.matrix(), ut.matrix());
}

stiefel::StiefelPoint initial_basis(const MsaData& data, Index rank) {
  const Matrix labeled = data.labeled_target();
  Matrix stacked(data.source.rows() + labeled.rows(), data.source.cols());
  stacked.topRows(data.source.rows()) = data.source;
  if (labeled.rows() > 0) stacked.bottomRows(labeled.rows()) = labeled;
  const Index d = stacked.cols();
  if (rank > d) throw ValidationError("initial_basis: rank exceeds the embedding dimension");
  Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  return stiefel::StiefelPoint::from_qr(svd.matrixV().leftCols(rank));
}

MsaModel fit(const MsaData& data, const MsaConfig& config) {
  const Objective objective(data, config);
  if (data.labeled.empty()) {
    warn("fit: no labeled target samples; the supervised term uses the source only");
  }
  const stiefel::StiefelPoint start = initial_basis(data, config.rank);
  stiefel::StiefelPoint us = start;
  stiefel::StiefelPoint ut = start;
  const Index d = data.source.cols();
  stiefel::AdamState adam_s(d, config.rank, config.adam);
  stiefel::AdamState adam_t(d, config.rank, config.adam);
  ot::NetworkSimplex warm;

  std::vector<IterationRecord> trace;
  std::vector<double> best_so_far;
  std::optional<MsaModel> best;
  std::optional<ot::TransportPlan> initial_plan;

  for (int iter = 0; iter < config.max_iter; ++iter) {
    auto inner = objective.inner_solve(us.matrix(), ut.matrix(), &warm);
    IterationRecord record;
    record.iteration = iter;
    record.terms = objective.evaluate(us.matrix(), ut.matrix(), inner.beta, inner.plan);
    if (!std::isfinite(record.terms.total)) {
      std::ostringstream os;
      os << "fit: non-finite loss at iteration " << iter;
      throw FitError(os.str(), std::move(trace));
    }
    if (!initial_plan) initial_plan = inner.plan;

    const double previous_best = best_so_far.empty() ? std::numeric_limits<double>::infinity()
                                                     : best_so_far.back();
    if (record.terms.total < previous_best) {
      best = MsaModel{us, ut, inner.beta, inner.plan, *initial_plan, {}, {}, {}, iter, config};
    }
    best_so_far.push_back(std::min(previous_best, record.terms.total));

    const auto grad = objective.gradient(us.matrix(), ut.matrix(), inner.beta, inner.plan);
    auto [next_adam_s, next_us] = stiefel::adam_step(std::move(adam_s), us, grad.source);
    auto [next_adam_t, next_ut] = stiefel::adam_step(std::move(adam_t), ut, grad.target);
    adam_s = std::move(next_adam_s);
    adam_t = std::move(next_adam_t);
    us = std::move(next_us);
    ut = std::move(next_ut);
    record.post_step_total =
        objective.evaluate(us.matrix(), ut.matrix(), inner.beta, inner.plan).total;
    trace.push_back(record);

    const auto k = static_cast<std::size_t>(iter);
    const auto w = static_cast<std::size_t>(config.window);
    if (k >= w) {
      const double before = best_so_far[k - w];
      if (before - best_so_far[k] <= config.tolerance * std::abs(before)) break;
    }
  }

  MsaModel model = std::move(*best);
  model.trace = std::move(trace);
  return model;
}

Vector predict(const MsaModel& model, const Matrix& target_embeddings) {
  if (target_embeddings.cols() != model.target_basis.ambient_dim()) {
    std::ostringstream os;
    os << "predict: embeddings have " << target_embeddings.cols() << " columns, model expects "
       << model.target_basis.ambient_dim();
    throw ValidationError(os.str());
  }
  return model.predictor.predict(target_embeddings * model.target_basis.matrix());
}

Vector predict_covariances(const MsaModel& model,
                           const std::vector<std::vector<spd::SpdMatrix>>& bands) {
  if (bands.size() != model.target_means.size() || bands.empty()) {
    throw ValidationError("predict_covariances: band count does not match the model's target means");
  }
  const auto count = static_cast<Index>(bands.front().size());
  Index offset = 0;
  Matrix x(count, model.target_basis.ambient_dim());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (static_cast<Index>(bands[b].size()) != count) {
      throw ValidationError("predict_covariances: bands have different sample counts");
    }
    if (bands[b].front().dim() != model.target_means[b].dim()) {
      throw ValidationError("predict_covariances: covariance size differs from the stored base");
    }
    const auto set = spd::embed_dataset(bands[b], model.target_means[b]);
    if (offset + set.x.cols() > x.cols()) {
      throw ValidationError("predict_covariances: embedding size exceeds the model dimension");
    }
    x.middleCols(offset, set.x.cols()) = set.x;
    offset += set.x.cols();
  }
  if (offset != x.cols()) throw ValidationError("predict_covariances: embedding size mismatch");
  return predict(model, x);
}

}  // namespace msa
