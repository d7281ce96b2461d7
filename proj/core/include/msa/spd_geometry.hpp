#pragma once

// Affine-invariant Riemannian geometry on symmetric positive-definite (SPD)
// matrices: spectral matrix functions, geodesic distance, Frechet mean and the
// tangent-space (vech) embedding.

#include <optional>
#include <span>
#include <vector>

#include "msa/types.hpp"

namespace msa::spd {

/// Relative tolerance used for symmetry checks.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Eigenvalues below this fraction of the largest one are clamped (with a
/// warning) before log / negative powers.
inline constexpr double kEigenFloor = 1e-12;

bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTolerance);

/// A p x p real symmetric matrix. Element of the tangent space S_p.
class SymmetricMatrix {
 public:
  /// Throws ValidationError when `m` is not square or not symmetric.
  explicit SymmetricMatrix(Matrix m);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  Matrix m_;
};

/// A p x p symmetric positive-definite matrix (a covariance).
class SpdMatrix {
 public:
  /// Throws ValidationError when not square/symmetric and DomainError when an
  /// eigenvalue is not strictly positive.
  explicit SpdMatrix(Matrix m);

  static SpdMatrix identity(Index p);
  /// Wraps `m` after symmetrizing it; positivity is still checked.
  static SpdMatrix symmetrized(const Matrix& m);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  Matrix m_;
};

/// Scalar function applied to the spectrum of a symmetric matrix.
struct SpectralFunction {
  enum class Kind { log, exp, power };
  Kind kind;
  double exponent = 1.0;

  static SpectralFunction log() { return {Kind::log, 1.0}; }
  static SpectralFunction exp() { return {Kind::exp, 1.0}; }
  static SpectralFunction power(double t) { return {Kind::power, t}; }
};

/// Eigendecomposition-based matrix function. `log` and negative powers need
/// an SPD argument; `exp` accepts any symmetric matrix.
Matrix spd_function(const Matrix& s, SpectralFunction f);

SymmetricMatrix logm(const SpdMatrix& s);
SpdMatrix expm(const SymmetricMatrix& s);
SpdMatrix powm(const SpdMatrix& s, double t);
SpdMatrix sqrtm(const SpdMatrix& s);
SpdMatrix invsqrtm(const SpdMatrix& s);

/// Geodesic distance ||log(S^{-1/2} T S^{-1/2})||_F, computed from the
/// generalized eigenvalues of the pencil (T, S).
double airm_distance(const SpdMatrix& s, const SpdMatrix& t);

struct MeanOptions {
  double tolerance = 1e-8;  ///< on the Riemannian gradient norm
  int max_iter = 200;
};

/// Frechet (Karcher) mean under the affine-invariant metric, by the fixed
/// point iteration S <- S^{1/2} exp(mean_i log(S^{-1/2} S_i S^{-1/2})) S^{1/2}
/// started at the arithmetic mean. Throws ConvergenceError carrying the last
/// iterate when `max_iter` is exhausted.
SpdMatrix riemannian_mean(std::span<const SpdMatrix> mats,
                          const MeanOptions& options = {});

/// Half-vectorization of a symmetric matrix: row-major upper triangle
/// (11, 12, ..., 1p, 22, ..., pp) with off-diagonal entries scaled by sqrt(2),
/// so that ||vech(M)||_2 = ||M||_F.
Vector vech(const Matrix& m);
/// Inverse of vech for a vector of length p(p+1)/2.
Matrix unvech(const Vector& v);
Index vech_dim(Index p);
/// Position of entry (i, j), i <= j, inside vech.
Index vech_index(Index p, Index i, Index j);

/// vech(log(base^{-1/2} s base^{-1/2})). Its Euclidean norm equals
/// airm_distance(base, s).
Vector tangent_embed(const SpdMatrix& s, const SpdMatrix& base);

/// Embeddings of a whole set at a shared base point.
struct EmbeddedSet {
  Matrix x;  ///< one embedding per row
  SpdMatrix base;
};

/// Embeds every matrix at `base`, or at their Frechet mean when no base is
/// given.
EmbeddedSet embed_dataset(std::span<const SpdMatrix> mats,
                          const std::optional<SpdMatrix>& base = std::nullopt,
                          const MeanOptions& options = {});

/// Inverse of tangent_embed: base^{1/2} exp(unvech(x)) base^{1/2}.
SpdMatrix tangent_unembed(const Vector& x, const SpdMatrix& base);

}  // namespace msa::spd
