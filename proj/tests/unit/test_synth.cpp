#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "msa/errors.hpp"
#include "msa/synth.hpp"
#include "test_support.hpp"

namespace {

using namespace msa;
using namespace msa::synth;
using msa::testing::random_matrix;
using msa::testing::random_orthogonal;

MixingSpec base_spec(std::uint64_t seed) {
  MixingSpec s;
  s.p = 6;
  s.q = 2;
  s.n = s.m = 100;
  s.seed = seed;
  return s;
}

TEST(MixingSpec, Validation) {
  auto s = base_spec(0);
  s.q = 6;
  EXPECT_THROW(s.validate(), ValidationError);
  s = base_spec(0);
  s.m = 99;
  EXPECT_THROW(s.validate(), ValidationError);
  s = base_spec(0);
  s.source_mixing = Matrix::Identity(5, 5);
  EXPECT_THROW(s.validate(), ValidationError);
  s = base_spec(0);
  s.label_noise = -1;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(GeneratePair, IdentityMixingNoNoiseIsDiagonal) {
  auto s = base_spec(1);
  s.q = s.p - 1;
  s.source_mixing = Matrix::Identity(6, 6);
  s.target_mixing = Matrix::Identity(6, 6);
  s.noise_scale = 0.0;
  const auto pair = generate_pair(s);
  for (Index i = 0; i < s.n; ++i) {
    const Matrix& c = pair.source_covs[static_cast<std::size_t>(i)].matrix();
    EXPECT_LT((c - Matrix(c.diagonal().asDiagonal())).norm(), 1e-15);
    for (Index l = 0; l < s.q; ++l) EXPECT_EQ(c(l, l), pair.variances(i, l));
    EXPECT_EQ(c(5, 5), 1.0);
  }
}

TEST(GeneratePair, PairedVariancesAndLabels) {
  const auto pair = generate_pair(base_spec(2));
  const Matrix target = pair.target_variances();
  for (Index i = 0; i < pair.spec.n; ++i) {
    const Index j = pair.permutation[static_cast<std::size_t>(i)];
    EXPECT_EQ(pair.variances.row(i), target.row(j));
    EXPECT_EQ(pair.source_labels[i], pair.target_labels[j]);
  }
}

TEST(GeneratePair, LabelsFollowTheLinearModel) {
  auto s = base_spec(3);
  s.task = Task::regression;
  const auto pair = generate_pair(s);
  const Vector& b = pair.spec.beta;
  for (Index i = 0; i < s.n; ++i) {
    const double expected = b[0] + b[1] * std::log(pair.variances(i, 0)) + b[2] * std::log(pair.variances(i, 1));
    EXPECT_NEAR(pair.source_labels[i], expected, 1e-12);
  }
}

TEST(GeneratePair, ClassificationLabelsAreSigns) {
  auto s = base_spec(4);
  s.task = Task::classification;
  const auto pair = generate_pair(s);
  const Vector& b = pair.spec.beta;
  int positives = 0;
  for (Index i = 0; i < s.n; ++i) {
    const double score = b[0] + b[1] * std::log(pair.variances(i, 0)) + b[2] * std::log(pair.variances(i, 1));
    EXPECT_EQ(pair.source_labels[i], score >= 0.0 ? 1.0 : -1.0);
    positives += pair.source_labels[i] > 0 ? 1 : 0;
  }
  EXPECT_GT(positives, 10);
  EXPECT_LT(positives, 90);
}

TEST(GeneratePair, MixingConditionBounded) {
  auto s = base_spec(5);
  s.target_shift = 0.3;
  const auto r = resolve(s);
  for (const Matrix* a : {&r.source_mixing, &r.target_mixing}) {
    Eigen::JacobiSVD<Matrix> svd(*a);
    const Vector sv = svd.singularValues();
    EXPECT_LE(sv[0] / sv[sv.size() - 1], 100.0 * (1 + 1e-9));
  }
}

TEST(GeneratePair, DeterministicInSeed) {
  const auto a = generate_pair(base_spec(6));
  const auto b = generate_pair(base_spec(6));
  const auto c = generate_pair(base_spec(7));
  EXPECT_EQ(a.source_covs[5].matrix(), b.source_covs[5].matrix());
  EXPECT_EQ(a.target_labels, b.target_labels);
  EXPECT_NE(a.source_covs[5].matrix(), c.source_covs[5].matrix());
}

TEST(GeneratePair, LabeledFraction) {
  const auto pair = generate_pair(base_spec(8));
  int labeled = 0;
  for (bool b : pair.target_labeled) labeled += b ? 1 : 0;
  EXPECT_EQ(labeled, 10);
}

TEST(CongruenceOrthogonal, IdentityMapsToIdentity) {
  EXPECT_LT((congruence_orthogonal(Matrix::Identity(4, 4)) - Matrix::Identity(10, 10)).norm(), 1e-15);
}

TEST(CongruenceOrthogonal, OrthogonalAndConsistentWithVech) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix w = random_orthogonal(5, rng);
    const Matrix o = congruence_orthogonal(w);
    EXPECT_LT((o.transpose() * o - Matrix::Identity(15, 15)).norm(), 1e-9);
    Matrix m = random_matrix(5, 5, rng);
    m += m.transpose().eval();
    EXPECT_LT((spd::vech(w * m * w.transpose()) - o * spd::vech(m)).norm(), 1e-10);
  }
}

TEST(CongruenceOrthogonal, RejectsNonOrthogonal) {
  EXPECT_THROW(congruence_orthogonal(2.0 * Matrix::Identity(3, 3)), ValidationError);
}

TEST(OracleStiefel, IdentityMixingRecoversCenteredLogVariances) {
  auto s = base_spec(10);
  s.source_mixing = Matrix::Identity(6, 6);
  s.target_mixing = Matrix::Identity(6, 6);
  const auto setup = msa::testing::oracle_setup(s);
  const Matrix z = setup.prepared.recentered.source * setup.source_oracle.matrix();
  EXPECT_LT((z - centered_log_variances(setup.pair.variances)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OracleStiefel, PairwiseEqualityAcrossDomains) {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto s = base_spec(seed);
    s.target_shift = 0.7;
    const auto setup = msa::testing::oracle_setup(s);
    const Matrix zs = setup.prepared.recentered.source * setup.source_oracle.matrix();
    const Matrix zt = setup.prepared.recentered.target * setup.target_oracle.matrix();
    const Matrix truth = centered_log_variances(setup.pair.variances);
    for (Index i = 0; i < s.n; ++i) {
      const Index j = setup.pair.permutation[static_cast<std::size_t>(i)];
      EXPECT_LT((zs.row(i) - zt.row(j)).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((zs.row(i) - truth.row(i)).cwiseAbs().maxCoeff(), 1e-8);
    }
    EXPECT_LT(stiefel::orthonormality_residual(setup.source_oracle.matrix()), 1e-9);
    EXPECT_LT(stiefel::orthonormality_residual(setup.target_oracle.matrix()), 1e-9);
  }
}

TEST(OracleStiefel, LargerInstance) {
  MixingSpec s;
  s.p = 10;
  s.q = 8;
  s.n = s.m = 200;
  s.seed = 14;
  const auto setup = msa::testing::oracle_setup(s);
  const Matrix zs = setup.prepared.recentered.source * setup.source_oracle.matrix();
  EXPECT_LT((zs - centered_log_variances(setup.pair.variances)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OracleStiefel, JitterDegradesSmoothly) {
  for (double jitter : {0.0, 0.05, 0.2}) {
    auto s = base_spec(15);
    s.noise_jitter = jitter;
    const auto setup = msa::testing::oracle_setup(s);
    const Matrix zs = setup.prepared.recentered.source * setup.source_oracle.matrix();
    const double residual = (zs - centered_log_variances(setup.pair.variances)).cwiseAbs().maxCoeff();
    RecordProperty("jitter_" + std::to_string(jitter), std::to_string(residual));
    EXPECT_TRUE(std::isfinite(residual));
    if (jitter == 0.0) {
      EXPECT_LT(residual, 1e-8);
    }
  }
}

TEST(CenteredLogVariances, ColumnsSumToZero) {
  Matrix v(3, 2);
  v << 1, 2, 4, 8, 16, 0.5;
  const Matrix z = centered_log_variances(v);
  EXPECT_LT(z.colwise().sum().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(z(0, 0), std::log(1.0 / 4.0), 1e-14);
}

}  // namespace
