#pragma once

// Comparison methods on tangent-space embeddings: ridge (or logistic) models
// fit on different subsets and embeddings, and a summed-RBF kernel ridge.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msa/dataset.hpp"
#include "msa/types.hpp"

namespace msa::baselines {

enum class Method {
  ridge_source,             ///< "ridge_S": source only, global-mean embedding
  ridge_labeled_target,     ///< "ridge_Tl": labeled target only, global-mean embedding
  ridge_recenter_source,    ///< "ridge_recenter_S"
  ridge_recenter_both,      ///< "ridge_recenter_SuT": source + labeled target
  rbf_recenter_both,        ///< "rbf_recenter_SuTl": kernel ridge, source + labeled target
};

std::string_view to_string(Method method);
/// Throws ValidationError on an unknown tag.
Method parse_method(std::string_view tag);
const std::vector<Method>& all_methods();

/// Embedding each method is defined on.
EmbeddingMode embedding_mode(Method method);

struct BaselineSpec {
  Method method = Method::ridge_source;
  double ridge = 1e-2;   ///< ridge / logistic penalty, or kernel ridge strength
  double sigma2 = 1.0;   ///< RBF bandwidth (rbf only)
};

/// Labels and split for one run. `labeled` indexes target rows.
struct LabeledSplit {
  Vector source_labels;
  Vector target_labels;  ///< all target labels; only `labeled` entries are read
  std::vector<Index> labeled;
  Task task = Task::regression;
};

/// Predictions for every target row. Throws ValidationError when the
/// embedding mode does not match the method or ridge_Tl has no labels.
Vector run_baseline(const BaselineSpec& spec, const EmbeddedPair& embedding,
                    const LabeledSplit& split);

}  // namespace msa::baselines
