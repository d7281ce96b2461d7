#pragma once

// Synthetic two-domain covariance data under the mixing model
//   Sigma_i = A blockdiag(diag(p_i), N_i) A^T
// with a shared set of signal variances paired across domains by a random
// permutation, plus the exact Stiefel bases that recover the log-variances.

#include <cstdint>
#include <vector>

#include "msa/dataset.hpp"
#include "msa/spd_geometry.hpp"
#include "msa/stiefel.hpp"
#include "msa/types.hpp"

namespace msa::synth {

struct MixingSpec {
  Index p = 6;  ///< channels
  Index q = 2;  ///< signal sources
  Index n = 100;
  Index m = 100;  ///< must equal n
  /// p x p mixing matrices. Empty: drawn from the seed.
  Matrix source_mixing;
  Matrix target_mixing;
  /// When the target mixing is drawn: negative gives an independent draw,
  /// otherwise A^T = A^S + target_shift * G with G standard Gaussian.
  double target_shift = -1.0;
  double max_condition = 100.0;  ///< drawn mixings are re-conditioned to this
  /// log p_{i,l} ~ U[log_variance_low, log_variance_high]
  double log_variance_low = -1.0;
  double log_variance_high = 1.0;
  /// Shared noise block expm(noise_scale * G_sym); 0 gives the identity.
  double noise_scale = 0.5;
  /// Per-sample dispersion of the noise blocks around the shared block.
  double noise_jitter = 0.0;
  /// (beta_0, beta_1, ..., beta_q). Empty: drawn from the seed as
  /// beta_scale times standard normal.
  Vector beta;
  double beta_scale = 1.0;
  double label_noise = 0.0;  ///< std of the additive label noise
  Task task = Task::regression;
  /// Fraction of target samples marked labeled in the exported dataset.
  double labeled_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Throws ValidationError.
  void validate() const;
};

/// Fills in every seed-drawn quantity (mixings, beta) deterministically.
MixingSpec resolve(const MixingSpec& spec);

struct DomainPair {
  MixingSpec spec;  ///< resolved
  std::vector<spd::SpdMatrix> source_covs;
  std::vector<spd::SpdMatrix> target_covs;
  Vector source_labels;
  Vector target_labels;
  std::vector<bool> target_labeled;
  /// n x q; row i holds the variances of source sample i.
  Matrix variances;
  /// source sample i is paired with target sample permutation[i]
  std::vector<Index> permutation;
  /// Noise blocks actually used, in each domain's own sample order.
  std::vector<spd::SpdMatrix> source_noise;
  std::vector<spd::SpdMatrix> target_noise;

  /// n x q; row j holds the variances of target sample j.
  Matrix target_variances() const;
  /// Single-band dataset view.
  Dataset to_dataset() const;
};

DomainPair generate_pair(const MixingSpec& spec);

/// O_W with O_W vech(M) = vech(W M W^T) for symmetric M.
Matrix congruence_orthogonal(const Matrix& w);

enum class DomainTag { source, target };

/// Basis U with U^T x_i = log(p_i / pbar) for the embeddings of the given
/// domain at the Frechet mean `base` (computed from the domain's covariances
/// when not given).
stiefel::StiefelPoint oracle_stiefel(const DomainPair& pair, DomainTag domain,
                                     const std::optional<spd::SpdMatrix>& base = std::nullopt,
                                     const spd::MeanOptions& options = {1e-12, 500});

/// log(p_{i,l} / pbar_l) with pbar the per-column geometric mean.
Matrix centered_log_variances(const Matrix& variances);

}  // namespace msa::synth
