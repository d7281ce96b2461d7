#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "msa/baselines.hpp"
#include "msa/dataset.hpp"
#include "msa/errors.hpp"
#include "test_support.hpp"

namespace {

using namespace msa;
using namespace msa::baselines;
using msa::testing::random_spd;

Dataset random_dataset(Index p, Index n, std::mt19937_64& rng, bool same_domains) {
  Dataset data;
  data.source.bands.resize(1);
  data.target.bands.resize(1);
  for (Index i = 0; i < n; ++i) {
    data.source.bands[0].emplace_back(random_spd(p, rng));
    data.target.bands[0].push_back(same_domains ? data.source.bands[0].back()
                                                : spd::SpdMatrix(random_spd(p, rng)));
  }
  data.source.labels = msa::testing::random_vector(n, rng);
  data.target.labels = msa::testing::random_vector(n, rng);
  data.source.labeled.assign(static_cast<std::size_t>(n), true);
  data.target.labeled.assign(static_cast<std::size_t>(n), false);
  for (Index j = 0; j < n; j += 3) data.target.labeled[static_cast<std::size_t>(j)] = true;
  return data;
}

LabeledSplit split_of(const Dataset& data) {
  return {data.source.labels, data.target.labels, data.target.labeled_indices(), data.task};
}

double mae_on(const Vector& pred, const Vector& truth, const std::vector<Index>& rows) {
  double s = 0.0;
  for (Index j : rows) s += std::abs(pred[j] - truth[j]);
  return s / static_cast<double>(rows.size());
}

TEST(Methods, TagsRoundTrip) {
  for (Method m : all_methods()) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(all_methods().size(), 5u);
  EXPECT_THROW(parse_method("ridge_X"), ValidationError);
}

TEST(Methods, EmbeddingModes) {
  EXPECT_EQ(embedding_mode(Method::ridge_source), EmbeddingMode::global_mean);
  EXPECT_EQ(embedding_mode(Method::ridge_labeled_target), EmbeddingMode::global_mean);
  EXPECT_EQ(embedding_mode(Method::ridge_recenter_source), EmbeddingMode::per_domain_mean);
  EXPECT_EQ(embedding_mode(Method::rbf_recenter_both), EmbeddingMode::per_domain_mean);
}

TEST(EmbedPair, RecenteredDomainsHaveZeroMean) {
  std::mt19937_64 rng(1);
  const auto data = random_dataset(4, 30, rng, false);
  const auto e = embed_pair(data, EmbeddingMode::per_domain_mean, {1e-10, 500});
  EXPECT_LE(e.source.colwise().mean().norm(), 1e-6);
  EXPECT_LE(e.target.colwise().mean().norm(), 1e-6);
  EXPECT_EQ(e.block_sizes, std::vector<Index>{10});
}

TEST(EmbedPair, GlobalModeSharesTheBase) {
  std::mt19937_64 rng(2);
  const auto data = random_dataset(3, 10, rng, false);
  const auto e = embed_pair(data, EmbeddingMode::global_mean);
  EXPECT_EQ(e.source_means[0].matrix(), e.target_means[0].matrix());
}

TEST(SplitBlocks, Contiguous) {
  Matrix x = Matrix::Random(2, 5);
  const auto parts = split_blocks(x, {2, 3});
  EXPECT_EQ(parts[1], x.rightCols(3));
  EXPECT_THROW(split_blocks(x, {2, 2}), ValidationError);
}

TEST(RunBaseline, RecenteringIsNoOpWithoutShift) {
  std::mt19937_64 rng(3);
  const auto data = random_dataset(4, 40, rng, true);
  const auto split = split_of(data);
  const Vector a = run_baseline({Method::ridge_source, 1e-2, 1.0},
                                embed_pair(data, EmbeddingMode::global_mean), split);
  const Vector b = run_baseline({Method::ridge_recenter_source, 1e-2, 1.0},
                                embed_pair(data, EmbeddingMode::per_domain_mean), split);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(RunBaseline, LabeledTargetRidgeInterpolates) {
  std::mt19937_64 rng(4);
  auto data = random_dataset(3, 60, rng, false);
  const auto e = embed_pair(data, EmbeddingMode::global_mean);
  const Vector w = msa::testing::random_vector(e.target.cols(), rng);
  data.target.labels = (e.target * w).array() + 0.5;
  const Vector pred = run_baseline({Method::ridge_labeled_target, 1e-12, 1.0}, e, split_of(data));
  for (Index j : data.target.labeled_indices()) EXPECT_NEAR(pred[j], data.target.labels[j], 1e-6);
}

TEST(RunBaseline, RecenteringHelpsOnShiftedPairs) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    synth::MixingSpec spec;
    spec.p = 6;
    spec.q = 2;
    spec.n = spec.m = 100;
    spec.target_shift = 0.5;
    spec.seed = seed;
    const auto data = synth::generate_pair(spec).to_dataset();
    const auto split = split_of(data);
    const auto unlabeled = data.target.unlabeled_indices();
    const double plain = mae_on(run_baseline({Method::ridge_source, 1e-2, 1.0},
                                             embed_pair(data, EmbeddingMode::global_mean), split),
                                data.target.labels, unlabeled);
    const double recentered = mae_on(run_baseline({Method::ridge_recenter_source, 1e-2, 1.0},
                                                  embed_pair(data, EmbeddingMode::per_domain_mean), split),
                                     data.target.labels, unlabeled);
    wins += recentered <= plain ? 1 : 0;
  }
  EXPECT_GE(wins, 70);
}

TEST(RunBaseline, PredictsEveryTargetRow) {
  std::mt19937_64 rng(5);
  const auto data = random_dataset(3, 20, rng, false);
  const auto split = split_of(data);
  for (Method m : all_methods()) {
    const auto e = embed_pair(data, embedding_mode(m));
    const Vector pred = run_baseline({m, 1e-1, 1.0}, e, split);
    EXPECT_EQ(pred.size(), 20);
    EXPECT_TRUE(pred.allFinite()) << to_string(m);
  }
}

TEST(RunBaseline, ClassificationOutputsSigns) {
  std::mt19937_64 rng(6);
  auto data = random_dataset(3, 30, rng, false);
  data.task = Task::classification;
  auto sign = [](double v) { return v >= 0 ? 1.0 : -1.0; };
  data.source.labels = data.source.labels.unaryExpr(sign);
  data.target.labels = data.target.labels.unaryExpr(sign);
  data.source.labels[0] = 1;
  data.source.labels[1] = -1;
  data.target.labels[0] = 1;
  data.target.labels[3] = -1;
  const auto split = split_of(data);
  for (Method m : all_methods()) {
    const Vector pred = run_baseline({m, 1.0, 1.0}, embed_pair(data, embedding_mode(m)), split);
    for (Index j = 0; j < pred.size(); ++j) EXPECT_TRUE(pred[j] == 1.0 || pred[j] == -1.0);
  }
}

TEST(RunBaseline, Errors) {
  std::mt19937_64 rng(7);
  auto data = random_dataset(3, 12, rng, false);
  const auto global = embed_pair(data, EmbeddingMode::global_mean);
  EXPECT_THROW(run_baseline({Method::ridge_recenter_source, 1e-2, 1.0}, global, split_of(data)),
               ValidationError);
  auto split = split_of(data);
  split.labeled.clear();
  EXPECT_THROW(run_baseline({Method::ridge_labeled_target, 1e-2, 1.0}, global, split), ValidationError);
}

}  // namespace
