#pragma once

// Synthetic fixtures built on the library's generator, shared by the unit
// and acceptance suites.

#include <optional>
#include <vector>

#include "msa/experiments.hpp"
#include "msa/msa.hpp"
#include "msa/synth.hpp"

namespace msa::testing {

struct OracleSetup {
  synth::DomainPair pair;
  experiments::PreparedData prepared;
  stiefel::StiefelPoint source_oracle;
  stiefel::StiefelPoint target_oracle;
};

inline OracleSetup oracle_setup(const synth::MixingSpec& spec) {
  auto pair = synth::generate_pair(spec);
  auto prepared = experiments::prepare(pair.to_dataset(), {1e-12, 500});
  auto us = synth::oracle_stiefel(pair, synth::DomainTag::source, prepared.recentered.source_means[0]);
  auto ut = synth::oracle_stiefel(pair, synth::DomainTag::target, prepared.recentered.target_means[0]);
  return {std::move(pair), std::move(prepared), std::move(us), std::move(ut)};
}

inline MsaData msa_data(const experiments::PreparedData& prepared, const std::vector<Index>& labeled) {
  MsaData data;
  data.source = prepared.recentered.source;
  data.source_labels = prepared.source_labels;
  data.target = prepared.recentered.target;
  data.labeled = labeled;
  data.target_labels.resize(static_cast<Index>(labeled.size()));
  for (std::size_t k = 0; k < labeled.size(); ++k) {
    data.target_labels[static_cast<Index>(k)] = prepared.target_labels[labeled[k]];
  }
  data.task = prepared.task;
  return data;
}

/// Ridge on the true centered log-variances: fit on the source samples and
/// the labeled target samples, evaluated on the unlabeled target samples.
inline double oracle_ridge_mae(const synth::DomainPair& pair, const experiments::SplitMask& split,
                               double epsilon) {
  const Matrix zs = synth::centered_log_variances(pair.variances);
  const Matrix zt = synth::centered_log_variances(pair.target_variances());
  const auto unlabeled = experiments::unlabeled_indices(split, zt.rows());
  Matrix z(zs.rows() + static_cast<Index>(split.labeled.size()), zs.cols());
  Vector y(z.rows());
  z.topRows(zs.rows()) = zs;
  y.head(zs.rows()) = pair.source_labels;
  for (std::size_t k = 0; k < split.labeled.size(); ++k) {
    z.row(zs.rows() + static_cast<Index>(k)) = zt.row(split.labeled[k]);
    y[zs.rows() + static_cast<Index>(k)] = pair.target_labels[split.labeled[k]];
  }
  const auto model = predictors::fit_ridge(z, y, epsilon);
  double total = 0.0;
  for (Index j : unlabeled) {
    total += std::abs(model.decision(zt.row(j))[0] - pair.target_labels[j]);
  }
  return total / static_cast<double>(unlabeled.size());
}

}  // namespace msa::testing
