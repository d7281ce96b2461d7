#include "msa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "msa/errors.hpp"

namespace msa::synth {
namespace {

using Rng = std::mt19937_64;

Matrix gaussian(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  // column-major fill keeps the draw order independent of Eigen internals
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  return g;
}

Matrix recondition(const Matrix& a, double max_condition) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector s = svd.singularValues().cwiseMax(svd.singularValues()[0] / max_condition);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
}

spd::SpdMatrix sym_exp(const Matrix& g, double scale) {
  return spd::SpdMatrix::symmetrized(
      spd::spd_function(0.5 * scale * (g + g.transpose()), spd::SpectralFunction::exp()));
}

Matrix block_diag(const Vector& variances, const Matrix& noise) {
  const Index q = variances.size();
  const Index r = noise.rows();
  Matrix e = Matrix::Zero(q + r, q + r);
  e.topLeftCorner(q, q) = variances.asDiagonal();
  e.bottomRightCorner(r, r) = noise;
  return e;
}

// Separate streams per purpose so that changing one law leaves the others.
Rng stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return Rng(seq);
}

enum Purpose : std::uint64_t {
  kMixing = 1,
  kBeta = 2,
  kVariances = 3,
  kNoise = 4,
  kPermutation = 5,
  kLabelNoise = 6,
  kMask = 7,
};

}  // namespace

void MixingSpec::validate() const {
  std::ostringstream os;
  if (p < 2) os << "p must be >= 2; ";
  if (q < 1 || q >= p) os << "q must satisfy 1 <= q < p; ";
  if (n < 1) os << "n must be >= 1; ";
  if (m != n) os << "m must equal n; ";
  if (!(log_variance_low <= log_variance_high)) os << "variance bounds are reversed; ";
  if (!std::isfinite(log_variance_low) || !std::isfinite(log_variance_high)) {
    os << "variance bounds must be finite; ";
  }
  if (!(noise_scale >= 0.0) || !(noise_jitter >= 0.0) || !(label_noise >= 0.0)) {
    os << "noise scales must be >= 0; ";
  }
  if (!(beta_scale > 0.0)) os << "beta_scale must be > 0; ";
  if (!(max_condition >= 1.0)) os << "max_condition must be >= 1; ";
  if (!(labeled_fraction >= 0.0 && labeled_fraction <= 1.0)) {
    os << "labeled_fraction must lie in [0, 1]; ";
  }
  if (beta.size() != 0 && beta.size() != q + 1) os << "beta must have q + 1 entries; ";
  for (const Matrix* a : {&source_mixing, &target_mixing}) {
    if (a->size() == 0) continue;
    if (a->rows() != p || a->cols() != p) {
      os << "mixing matrices must be p x p; ";
    } else if (!(condition_number(*a) < 1e6)) {
      os << "mixing matrix is singular or too ill-conditioned; ";
    }
  }
  const std::string msg = os.str();
  if (!msg.empty()) throw ValidationError("MixingSpec: " + msg.substr(0, msg.size() - 2));
}

MixingSpec resolve(const MixingSpec& spec) {
  spec.validate();
  MixingSpec out = spec;
  Rng rng = stream(spec.seed, kMixing);
  const Matrix g_source = gaussian(rng, spec.p, spec.p);
  const Matrix g_target = gaussian(rng, spec.p, spec.p);
  if (out.source_mixing.size() == 0) out.source_mixing = recondition(g_source, spec.max_condition);
  if (out.target_mixing.size() == 0) {
    out.target_mixing = spec.target_shift < 0.0
                            ? recondition(g_target, spec.max_condition)
                            : recondition(out.source_mixing + spec.target_shift * g_target,
                                          spec.max_condition);
  }
  if (out.beta.size() == 0) {
    Rng beta_rng = stream(spec.seed, kBeta);
    std::normal_distribution<double> normal(0.0, 1.0);
    out.beta.resize(spec.q + 1);
    for (Index l = 0; l <= spec.q; ++l) out.beta[l] = spec.beta_scale * normal(beta_rng);
    // balanced classes: log-variances are symmetric around the interval midpoint
    if (spec.task == Task::classification) {
      const double mid = 0.5 * (spec.log_variance_low + spec.log_variance_high);
      out.beta[0] = -mid * out.beta.tail(spec.q).sum();
    }
  }
  return out;
}

Matrix DomainPair::target_variances() const {
  Matrix out(variances.rows(), variances.cols());
  for (Index i = 0; i < variances.rows(); ++i) {
    out.row(permutation[static_cast<std::size_t>(i)]) = variances.row(i);
  }
  return out;
}

Dataset DomainPair::to_dataset() const {
  Dataset data;
  data.task = spec.task;
  data.source.bands = {source_covs};
  data.source.labels = source_labels;
  data.source.labeled.assign(static_cast<std::size_t>(source_labels.size()), true);
  data.target.bands = {target_covs};
  data.target.labels = target_labels;
  data.target.labeled = target_labeled;
  return data;
}

DomainPair generate_pair(const MixingSpec& input) {
  DomainPair pair;
  pair.spec = resolve(input);
  const MixingSpec& spec = pair.spec;
  const Index n = spec.n;
  const Index q = spec.q;
  const Index r = spec.p - q;

  Rng var_rng = stream(spec.seed, kVariances);
  std::uniform_real_distribution<double> log_uniform(spec.log_variance_low,
                                                     spec.log_variance_high);
  pair.variances.resize(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < q; ++l) pair.variances(i, l) = std::exp(log_uniform(var_rng));
  }

  Rng perm_rng = stream(spec.seed, kPermutation);
  pair.permutation.resize(static_cast<std::size_t>(n));
  std::iota(pair.permutation.begin(), pair.permutation.end(), Index{0});
  std::shuffle(pair.permutation.begin(), pair.permutation.end(), perm_rng);

  // Each domain gets its own shared block; jitter is per sample.
  Rng noise_rng = stream(spec.seed, kNoise);
  auto make_noise = [&](std::vector<spd::SpdMatrix>& out) {
    const spd::SpdMatrix shared = sym_exp(gaussian(noise_rng, r, r), spec.noise_scale);
    const Matrix half = spd::spd_function(shared.matrix(), spd::SpectralFunction::power(0.5));
    out.clear();
    out.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      if (spec.noise_jitter > 0.0) {
        const spd::SpdMatrix jitter = sym_exp(gaussian(noise_rng, r, r), spec.noise_jitter);
        out.push_back(spd::SpdMatrix::symmetrized(half * jitter.matrix() * half));
      } else {
        out.push_back(shared);
      }
    }
  };
  make_noise(pair.source_noise);
  make_noise(pair.target_noise);

  const Matrix target_vars = pair.target_variances();
  auto make_covs = [&](const Matrix& vars, const std::vector<spd::SpdMatrix>& noise,
                       const Matrix& a) {
    std::vector<spd::SpdMatrix> covs;
    covs.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const Matrix e = block_diag(vars.row(i).transpose(), noise[static_cast<std::size_t>(i)].matrix());
      covs.push_back(spd::SpdMatrix::symmetrized(a * e * a.transpose()));
    }
    return covs;
  };
  pair.source_covs = make_covs(pair.variances, pair.source_noise, spec.source_mixing);
  pair.target_covs = make_covs(target_vars, pair.target_noise, spec.target_mixing);

  Rng label_rng = stream(spec.seed, kLabelNoise);
  std::normal_distribution<double> normal(0.0, spec.label_noise > 0.0 ? spec.label_noise : 1.0);
  auto make_labels = [&](const Matrix& vars) {
    Vector y = (vars.array().log().matrix() * spec.beta.tail(q)).array() + spec.beta[0];
    if (spec.label_noise > 0.0) {
      for (Index i = 0; i < n; ++i) y[i] += normal(label_rng);
    }
    if (spec.task == Task::classification) {
      y = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    }
    return y;
  };
  pair.source_labels = make_labels(pair.variances);
  pair.target_labels = make_labels(target_vars);

  Rng mask_rng = stream(spec.seed, kMask);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), mask_rng);
  const auto k = static_cast<std::size_t>(std::llround(spec.labeled_fraction * static_cast<double>(n)));
  pair.target_labeled.assign(static_cast<std::size_t>(n), false);
  for (std::size_t j = 0; j < k; ++j) pair.target_labeled[static_cast<std::size_t>(order[j])] = true;
  return pair;
}

Matrix congruence_orthogonal(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() == 0) {
    throw ValidationError("congruence_orthogonal: W must be square");
  }
  const Index p = w.rows();
  const double residual = (w.transpose() * w - Matrix::Identity(p, p)).norm();
  if (!(residual <= 1e-10)) {
    std::ostringstream os;
    os << "congruence_orthogonal: W is not orthogonal (residual " << residual << ")";
    throw ValidationError(os.str());
  }
  const Index d = spd::vech_dim(p);
  Matrix o(d, d);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i; j < p; ++j) {
      // orthonormal basis element of the symmetric matrices with vech = e_k
      Matrix basis = Matrix::Zero(p, p);
      if (i == j) {
        basis(i, i) = 1.0;
      } else {
        basis(i, j) = basis(j, i) = 1.0 / std::sqrt(2.0);
      }
      o.col(spd::vech_index(p, i, j)) = spd::vech(w * basis * w.transpose());
    }
  }
  return o;
}

Matrix centered_log_variances(const Matrix& variances) {
  const Matrix logs = variances.array().log().matrix();
  return logs.rowwise() - logs.colwise().mean();
}

stiefel::StiefelPoint oracle_stiefel(const DomainPair& pair, DomainTag domain,
                                     const std::optional<spd::SpdMatrix>& base,
                                     const spd::MeanOptions& options) {
  const MixingSpec& spec = pair.spec;
  const bool is_source = domain == DomainTag::source;
  const auto& covs = is_source ? pair.source_covs : pair.target_covs;
  const auto& noise = is_source ? pair.source_noise : pair.target_noise;
  const Matrix& a = is_source ? spec.source_mixing : spec.target_mixing;
  const Index q = spec.q;

  const spd::SpdMatrix mean = base ? *base : spd::riemannian_mean(covs, options);
  const Vector pbar = pair.variances.array().log().colwise().mean().exp().transpose();
  const spd::SpdMatrix noise_mean = spd::riemannian_mean(noise, options);
  const Matrix ebar = block_diag(pbar, noise_mean.matrix());
  const Matrix w = spd::spd_function(mean.matrix(), spd::SpectralFunction::power(-0.5)) * a *
                   spd::spd_function(ebar, spd::SpectralFunction::power(0.5));
  const double residual = (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).norm();
  if (!(residual <= 1e-6)) {
    std::ostringstream os;
    os << "oracle_stiefel: W fails orthogonality (residual " << residual
       << "); the domain mean does not factor through the mixing model";
    throw NumericalError(os.str());
  }
  // nearest orthogonal matrix (polar factor)
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix w_orth = svd.matrixU() * svd.matrixV().transpose();
  const Matrix o = congruence_orthogonal(w_orth);
  Matrix u(o.rows(), q);
  for (Index l = 0; l < q; ++l) u.col(l) = o.col(spd::vech_index(spec.p, l, l));
  return stiefel::StiefelPoint(u, 1e-9);
}

}  // namespace msa::synth
