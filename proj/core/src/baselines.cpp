#include "msa/baselines.hpp"

#include <array>
#include <utility>

#include "msa/errors.hpp"
#include "msa/predictors.hpp"

namespace msa::baselines {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 5> kTags{{
    {Method::ridge_source, "ridge_S"},
    {Method::ridge_labeled_target, "ridge_Tl"},
    {Method::ridge_recenter_source, "ridge_recenter_S"},
    {Method::ridge_recenter_both, "ridge_recenter_SuT"},
    {Method::rbf_recenter_both, "rbf_recenter_SuTl"},
}};

Matrix rows(const Matrix& x, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(idx[i]);
  return out;
}

Vector entries(const Vector& y, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = y[idx[i]];
  return out;
}

predictors::LinearModel fit_linear(const Matrix& z, const Vector& y, double ridge, Task task) {
  return task == Task::regression ? predictors::fit_ridge(z, y, ridge)
                                  : predictors::fit_logistic(z, y, ridge);
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, tag] : kTags) {
    if (m == method) return tag;
  }
  return "unknown";
}

Method parse_method(std::string_view tag) {
  for (const auto& [m, t] : kTags) {
    if (t == tag) return m;
  }
  throw ValidationError("unknown baseline method '" + std::string(tag) + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& entry : kTags) out.push_back(entry.first);
    return out;
  }();
  return methods;
}

EmbeddingMode embedding_mode(Method method) {
  switch (method) {
    case Method::ridge_source:
    case Method::ridge_labeled_target:
      return EmbeddingMode::global_mean;
    default:
      return EmbeddingMode::per_domain_mean;
  }
}

Vector run_baseline(const BaselineSpec& spec, const EmbeddedPair& embedding,
                    const LabeledSplit& split) {
  if (embedding.mode != embedding_mode(spec.method)) {
    throw ValidationError(std::string(to_string(spec.method)) +
                          ": embedding computed with the wrong base means");
  }
  if (split.source_labels.size() != embedding.source.rows() ||
      split.target_labels.size() != embedding.target.rows()) {
    throw ValidationError("run_baseline: label counts do not match the embeddings");
  }
  if (!(spec.ridge >= 0.0)) throw ValidationError("run_baseline: ridge must be >= 0");
  const Matrix labeled_x = rows(embedding.target, split.labeled);
  const Vector labeled_y = entries(split.target_labels, split.labeled);

  auto stacked = [&]() {
    Matrix x(embedding.source.rows() + labeled_x.rows(), embedding.source.cols());
    x << embedding.source, labeled_x;
    Vector y(x.rows());
    y << split.source_labels, labeled_y;
    return std::pair{std::move(x), std::move(y)};
  };

  switch (spec.method) {
    case Method::ridge_source:
    case Method::ridge_recenter_source:
      return fit_linear(embedding.source, split.source_labels, spec.ridge, split.task)
          .predict(embedding.target);
    case Method::ridge_labeled_target:
      if (split.labeled.empty()) {
        throw ValidationError("ridge_Tl: no labeled target samples");
      }
      return fit_linear(labeled_x, labeled_y, spec.ridge, split.task).predict(embedding.target);
    case Method::ridge_recenter_both: {
      auto [x, y] = stacked();
      return fit_linear(x, y, spec.ridge, split.task).predict(embedding.target);
    }
    case Method::rbf_recenter_both: {
      auto [x, y] = stacked();
      const auto model = predictors::fit_kernel_ridge(split_blocks(x, embedding.block_sizes), y,
                                                      spec.sigma2, spec.ridge);
      const auto test_blocks = split_blocks(embedding.target, embedding.block_sizes);
      Vector out = model.predict(test_blocks);
      if (split.task == Task::classification) {
        out = out.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
      }
      return out;
    }
  }
  throw ValidationError("run_baseline: unhandled method");
}

}  // namespace msa::baselines
