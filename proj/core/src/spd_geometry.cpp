#include "msa/spd_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "msa/errors.hpp"

namespace msa::spd {
namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows()
       << "x" << m.cols();
    throw ValidationError(os.str());
  }
}

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ValidationError(os.str());
  }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

SymmetricMatrix::SymmetricMatrix(Matrix m) : m_(std::move(m)) {
  require_square(m_, "SymmetricMatrix");
  if (!is_symmetric(m_)) throw ValidationError("SymmetricMatrix: input is not symmetric");
}

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  require_square(m_, "SpdMatrix");
  if (!m_.allFinite()) throw ValidationError("SpdMatrix: non-finite entries");
  if (!is_symmetric(m_)) throw ValidationError("SpdMatrix: input is not symmetric");
  Eigen::LLT<Matrix> llt(m_);
  if (llt.info() != Eigen::Success) {
    throw DomainError("SpdMatrix: input is not positive definite");
  }
}

SpdMatrix SpdMatrix::identity(Index p) { return SpdMatrix(Matrix::Identity(p, p)); }

SpdMatrix SpdMatrix::symmetrized(const Matrix& m) {
  require_square(m, "SpdMatrix");
  return SpdMatrix(symmetrize(m));
}

Matrix spd_function(const Matrix& s, SpectralFunction f) {
  require_square(s, "spd_function");
  if (!is_symmetric(s)) throw ValidationError("spd_function: input is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("spd_function: eigendecomposition failed");
  }
  Vector lambda = eig.eigenvalues();

  const bool needs_positive = f.kind != SpectralFunction::Kind::exp;
  if (needs_positive) {
    const double lmax = lambda.maxCoeff();
    if (lambda.minCoeff() <= 0.0 || lmax <= 0.0) {
      throw DomainError("spd_function: matrix has a non-positive eigenvalue");
    }
    const double floor = kEigenFloor * lmax;
    if (lambda.minCoeff() < floor) {
      std::ostringstream os;
      os << "spd_function: clamping eigenvalue " << lambda.minCoeff() << " to "
         << floor;
      warn(os.str());
      lambda = lambda.cwiseMax(floor);
    }
  }

  Vector mapped(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    switch (f.kind) {
      case SpectralFunction::Kind::log:
        mapped[i] = std::log(lambda[i]);
        break;
      case SpectralFunction::Kind::exp:
        mapped[i] = std::exp(lambda[i]);
        break;
      case SpectralFunction::Kind::power:
        mapped[i] = std::pow(lambda[i], f.exponent);
        break;
    }
  }
  const Matrix& v = eig.eigenvectors();
  return symmetrize(v * mapped.asDiagonal() * v.transpose());
}

SymmetricMatrix logm(const SpdMatrix& s) {
  return SymmetricMatrix(spd_function(s.matrix(), SpectralFunction::log()));
}

SpdMatrix expm(const SymmetricMatrix& s) {
  return SpdMatrix(spd_function(s.matrix(), SpectralFunction::exp()));
}

SpdMatrix powm(const SpdMatrix& s, double t) {
  return SpdMatrix(spd_function(s.matrix(), SpectralFunction::power(t)));
}

SpdMatrix sqrtm(const SpdMatrix& s) { return powm(s, 0.5); }

SpdMatrix invsqrtm(const SpdMatrix& s) { return powm(s, -0.5); }

double airm_distance(const SpdMatrix& s, const SpdMatrix& t) {
  require_same_dim(s.dim(), t.dim(), "airm_distance");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(t.matrix(), s.matrix(),
                                                        Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) {
    throw NumericalError("airm_distance: generalized eigensolver failed");
  }
  const Vector& lambda = ges.eigenvalues();
  if (lambda.minCoeff() <= 0.0) {
    throw DomainError("airm_distance: non-positive generalized eigenvalue");
  }
  return std::sqrt(lambda.array().log().square().sum());
}

SpdMatrix riemannian_mean(std::span<const SpdMatrix> mats, const MeanOptions& options) {
  if (mats.empty()) throw ValidationError("riemannian_mean: empty input");
  const Index p = mats.front().dim();
  Matrix current = Matrix::Zero(p, p);
  for (const auto& m : mats) {
    require_same_dim(p, m.dim(), "riemannian_mean");
    current += m.matrix();
  }
  current /= static_cast<double>(mats.size());

  // mean of the logs at `at`, the Frechet cost there, and the square root
  // used to map back
  struct Gradient {
    Matrix tangent;
    Matrix half;
    double norm;
    double cost;
  };
  auto gradient_at = [&](const Matrix& at) {
    Gradient g;
    g.half = spd_function(at, SpectralFunction::power(0.5));
    const Matrix inv_half = spd_function(at, SpectralFunction::power(-0.5));
    g.tangent = Matrix::Zero(p, p);
    g.cost = 0.0;
    for (const auto& m : mats) {
      const Matrix l = spd_function(symmetrize(inv_half * m.matrix() * inv_half), SpectralFunction::log());
      g.tangent += l;
      g.cost += l.squaredNorm();
    }
    g.tangent /= static_cast<double>(mats.size());
    g.cost /= static_cast<double>(mats.size());
    g.norm = g.tangent.norm();
    return g;
  };

  // Fixed-point iteration S <- S^{1/2} exp(t G) S^{1/2}. t = 1 is the plain
  // Karcher update, which oscillates slowly on widely spread inputs; the next
  // step comes from a secant estimate of the curvature along G (comparing
  // whitened tangents at neighbouring points) and halves while the Frechet
  // cost fails to decrease.
  Gradient grad = gradient_at(current);
  double step = 1.0;
  for (int iter = 0; iter < options.max_iter && grad.norm > options.tolerance; ++iter) {
    auto move = [&](double t) {
      return symmetrize(grad.half * spd_function(t * grad.tangent, SpectralFunction::exp()) * grad.half);
    };
    Matrix candidate = move(step);
    Gradient next = gradient_at(candidate);
    // Near the mean the cost decrease drops below rounding in the cost, so
    // the gradient norm takes over as the merit.
    const bool cost_resolves = grad.norm * grad.norm > 1e-10 * grad.cost;
    auto rejected = [&](const Gradient& g, double t) {
      return cost_resolves ? g.cost > grad.cost - 1e-4 * t * grad.norm * grad.norm : g.norm >= grad.norm;
    };
    while (rejected(next, step) && step > 1e-4) {
      step *= 0.5;
      candidate = move(step);
      next = gradient_at(candidate);
    }
    if (rejected(next, step)) break;  // at the floating-point floor
    const double shrink = 1.0 - next.tangent.cwiseProduct(grad.tangent).sum() / (grad.norm * grad.norm);
    step = shrink > 0.0 ? std::clamp(step / shrink, 1e-2, 1.0) : 1.0;
    current = std::move(candidate);
    grad = std::move(next);
  }
  if (grad.norm <= options.tolerance) return SpdMatrix(symmetrize(current));
  std::ostringstream os;
  os << "riemannian_mean: no convergence after " << options.max_iter
     << " iterations (gradient norm " << grad.norm << ")";
  throw ConvergenceError(os.str(), current, grad.norm);
}

Index vech_dim(Index p) { return p * (p + 1) / 2; }

Index vech_index(Index p, Index i, Index j) {
  if (i > j) std::swap(i, j);
  // rows 0..i-1 contribute p, p-1, ..., p-i+1 entries
  return i * p - i * (i - 1) / 2 + (j - i);
}

Vector vech(const Matrix& m) {
  require_square(m, "vech");
  const Index p = m.rows();
  Vector v(vech_dim(p));
  Index k = 0;
  for (Index i = 0; i < p; ++i) {
    v[k++] = m(i, i);
    for (Index j = i + 1; j < p; ++j) v[k++] = std::numbers::sqrt2 * m(i, j);
  }
  return v;
}

Matrix unvech(const Vector& v) {
  // p(p+1)/2 = n  =>  p = (sqrt(8n+1) - 1) / 2
  const auto p = static_cast<Index>(std::llround((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0));
  if (vech_dim(p) != v.size()) {
    throw ValidationError("unvech: length is not a triangular number");
  }
  Matrix m(p, p);
  Index k = 0;
  for (Index i = 0; i < p; ++i) {
    m(i, i) = v[k++];
    for (Index j = i + 1; j < p; ++j) {
      m(i, j) = m(j, i) = v[k++] / std::numbers::sqrt2;
    }
  }
  return m;
}

Vector tangent_embed(const SpdMatrix& s, const SpdMatrix& base) {
  require_same_dim(s.dim(), base.dim(), "tangent_embed");
  const Matrix inv_half = spd_function(base.matrix(), SpectralFunction::power(-0.5));
  return vech(spd_function(symmetrize(inv_half * s.matrix() * inv_half),
                           SpectralFunction::log()));
}

EmbeddedSet embed_dataset(std::span<const SpdMatrix> mats,
                          const std::optional<SpdMatrix>& base,
                          const MeanOptions& options) {
  if (mats.empty()) throw ValidationError("embed_dataset: empty input");
  SpdMatrix ref = base ? *base : riemannian_mean(mats, options);
  const Index p = ref.dim();
  const Matrix inv_half = spd_function(ref.matrix(), SpectralFunction::power(-0.5));
  Matrix x(static_cast<Index>(mats.size()), vech_dim(p));
  for (std::size_t i = 0; i < mats.size(); ++i) {
    require_same_dim(p, mats[i].dim(), "embed_dataset");
    x.row(static_cast<Index>(i)) =
        vech(spd_function(symmetrize(inv_half * mats[i].matrix() * inv_half),
                          SpectralFunction::log()))
            .transpose();
  }
  return {std::move(x), std::move(ref)};
}

SpdMatrix tangent_unembed(const Vector& x, const SpdMatrix& base) {
  const Matrix tangent = unvech(x);
  require_same_dim(tangent.rows(), base.dim(), "tangent_unembed");
  const Matrix half = spd_function(base.matrix(), SpectralFunction::power(0.5));
  return SpdMatrix::symmetrized(half * spd_function(tangent, SpectralFunction::exp()) * half);
}

}  // namespace msa::spd
