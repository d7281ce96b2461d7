#pragma once

// In-memory two-domain dataset of covariance matrices, optionally with
// several frequency bands per sample, and its tangent-space embeddings.

#include <vector>

#include "msa/spd_geometry.hpp"
#include "msa/types.hpp"

namespace msa {

struct DomainSamples {
  /// bands[b][i] is the covariance of sample i in band b.
  std::vector<std::vector<spd::SpdMatrix>> bands;
  /// One label per sample; NaN when unknown.
  Vector labels;
  /// Whether a sample's label may be used for training.
  std::vector<bool> labeled;

  Index size() const { return labels.size(); }
  Index band_count() const { return static_cast<Index>(bands.size()); }
  std::vector<Index> labeled_indices() const;
  std::vector<Index> unlabeled_indices() const;
};

struct Dataset {
  DomainSamples source;
  DomainSamples target;
  Task task = Task::regression;

  Index p() const;
  /// Throws ValidationError on inconsistent sizes or bands.
  void validate() const;
};

enum class EmbeddingMode {
  global_mean,      ///< every domain embedded at the mean of all covariances
  per_domain_mean,  ///< each domain embedded at its own mean (recentering)
};

/// Embeddings of both domains with one contiguous column block per band.
struct EmbeddedPair {
  Matrix source;
  Matrix target;
  std::vector<Index> block_sizes;
  EmbeddingMode mode = EmbeddingMode::per_domain_mean;
  std::vector<spd::SpdMatrix> source_means;  ///< one per band
  std::vector<spd::SpdMatrix> target_means;
};

EmbeddedPair embed_pair(const Dataset& data, EmbeddingMode mode,
                        const spd::MeanOptions& options = {});

/// Splits the columns of `x` into the given contiguous blocks.
std::vector<Matrix> split_blocks(const Matrix& x, const std::vector<Index>& block_sizes);

}  // namespace msa
