#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "msa/errors.hpp"
#include "msa/experiments.hpp"
#include "test_support.hpp"

namespace {

using namespace msa;
using namespace msa::experiments;

PreparedData small_problem(std::uint64_t seed) {
  synth::MixingSpec spec;
  spec.p = 4;
  spec.q = 2;
  spec.n = spec.m = 40;
  spec.target_shift = 0.3;
  spec.label_noise = 0.05;
  spec.seed = seed;
  return prepare(synth::generate_pair(spec).to_dataset());
}

BenchmarkConfig small_config() {
  BenchmarkConfig c;
  c.methods = {"msa", "ridge_S"};
  c.grid.gamma = {0.1};
  c.grid.rho = {1.0};
  c.grid.epsilon = {1e-2};
  c.grid.ridge = {1e-2, 1.0};
  c.grid.sigma2 = {1.0};
  c.msa.rank = 2;
  c.msa.max_iter = 30;
  c.splits = 3;
  c.record_wall_time = false;
  return c;
}

TEST(MakeSplits, HalfOfFour) {
  const auto splits = make_splits(4, 0.5, 3, 1);
  for (const auto& s : splits) EXPECT_EQ(s.labeled.size(), 2u);
}

TEST(MakeSplits, Deterministic) {
  const auto a = make_splits(50, 0.1, 10, 7);
  const auto b = make_splits(50, 0.1, 10, 7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].labeled, b[i].labeled);
    EXPECT_EQ(a[i].seed, b[i].seed);
  }
  EXPECT_NE(make_splits(50, 0.1, 1, 8)[0].labeled, a[0].labeled);
}

TEST(MakeSplits, HundredDistinctMasks) {
  const auto splits = make_splits(323, 0.10, 100, 0);
  std::set<std::vector<Index>> unique;
  for (const auto& s : splits) {
    EXPECT_EQ(s.labeled.size(), 32u);
    EXPECT_TRUE(std::is_sorted(s.labeled.begin(), s.labeled.end()));
    unique.insert(s.labeled);
  }
  EXPECT_EQ(unique.size(), 100u);
}

TEST(MakeSplits, Errors) {
  EXPECT_THROW(make_splits(4, 0.5, 7, 0), ValidationError);  // only 6 masks exist
  EXPECT_THROW(make_splits(10, 0.0, 1, 0), ValidationError);
  EXPECT_THROW(make_splits(10, 0.01, 1, 0), ValidationError);
}

TEST(UnlabeledIndices, Complement) {
  SplitMask mask{{1, 3}, 0.5, 0};
  EXPECT_EQ(unlabeled_indices(mask, 5), (std::vector<Index>{0, 2, 4}));
}

TEST(Evaluate, PerfectPredictions) {
  Vector y(4);
  y << 1, 2, 3, 5;
  const auto m = evaluate(y, y);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.r2, 1.0);
}

TEST(Evaluate, MeanPredictor) {
  Vector y(4);
  y << 1, 2, 3, 6;
  const auto m = evaluate(Vector::Constant(4, y.mean()), y);
  EXPECT_NEAR(m.mae, (y.array() - y.mean()).abs().mean(), 1e-15);
  EXPECT_NEAR(m.r2, 0.0, 1e-15);
}

TEST(Evaluate, TwoPassOracle) {
  std::mt19937_64 rng(1);
  const Vector y = msa::testing::random_vector(50, rng), p = msa::testing::random_vector(50, rng);
  double mean = 0.0;
  for (Index i = 0; i < 50; ++i) mean += y[i];
  mean /= 50;
  double abs_err = 0.0, sse = 0.0, sst = 0.0;
  for (Index i = 0; i < 50; ++i) {
    abs_err += std::abs(p[i] - y[i]);
    sse += (p[i] - y[i]) * (p[i] - y[i]);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  const auto m = evaluate(p, y);
  EXPECT_NEAR(m.mae, abs_err / 50, 1e-12);
  EXPECT_NEAR(m.r2, 1 - sse / sst, 1e-12);
  EXPECT_THROW(evaluate(p, Vector::Ones(50)), ValidationError);
  EXPECT_THROW(evaluate(p, Vector::Ones(3)), ValidationError);
}

TEST(ResultsCsv, RoundTrip) {
  std::vector<ResultRow> rows(2);
  rows[0] = {"msa", 42, {0.1, 10.0, 1e-4, 3}, 0.123456789012345678, 0.9, 1.5, "ok"};
  rows[1] = {"ridge_S", 43, {kMissing, kMissing, 1e-2, -1}, kMissing, kMissing, 0.0, "numerical_error"};
  std::stringstream ss;
  write_results_csv(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kResultsHeader);
  const auto back = read_results_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].mae, rows[0].mae);
  EXPECT_EQ(back[0].point.q, 3);
  EXPECT_TRUE(std::isnan(back[1].point.gamma));
  EXPECT_TRUE(std::isnan(back[1].mae));
  EXPECT_EQ(back[1].status, "numerical_error");
  std::stringstream bad("nope\n");
  EXPECT_THROW(read_results_csv(bad), ValidationError);
}

TEST(MethodGrid, Sizes) {
  const GridSpec g;
  EXPECT_EQ(method_grid("msa", g, 3).size(), 48u);
  EXPECT_EQ(method_grid("msa_no_grassmann", g, 3).size(), 12u);
  EXPECT_EQ(method_grid("msa_no_metric", g, 3).size(), 12u);
  EXPECT_EQ(method_grid("ridge_S", g, 3).size(), 4u);
  EXPECT_EQ(method_grid("rbf_recenter_SuTl", g, 3).size(), 20u);
  EXPECT_THROW(method_grid("nope", g, 3), ValidationError);
}

TEST(MethodGrid, AblationSwitches) {
  const MsaConfig base;
  const HyperPoint p{0.5, 2.0, 1e-3, 4};
  EXPECT_EQ(msa_config_for("msa_no_grassmann", p, base).rho, 0.0);
  EXPECT_EQ(msa_config_for("msa_no_ot", p, base).ot_weight, 0.0);
  EXPECT_EQ(msa_config_for("msa_no_similarity", p, base).similarity_weight, 0.0);
  EXPECT_EQ(msa_config_for("msa_no_metric", p, base).gamma, 0.0);
  EXPECT_EQ(msa_config_for("msa", p, base).rank, 4);
}

TEST(BenchmarkConfig, Validation) {
  auto c = small_config();
  c.methods = {"msa", "msa"};
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_config();
  c.methods = {"bogus"};
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_config();
  c.grid.ridge.clear();
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Prepare, RequiresCompleteTargetLabels) {
  synth::MixingSpec spec;
  spec.p = 3;
  spec.q = 1;
  spec.n = spec.m = 10;
  auto data = synth::generate_pair(spec).to_dataset();
  data.target.labels[4] = std::nan("");
  EXPECT_THROW(prepare(data), ValidationError);
}

TEST(RunBenchmark, SingleMethodSingleSplit) {
  const auto data = small_problem(1);
  auto c = small_config();
  c.methods = {"ridge_S"};
  c.grid.ridge = {1e-2};
  const auto result = run_benchmark(data, c, make_splits(40, 0.1, 1, 0));
  ASSERT_EQ(result.rows.size(), 1u);
  EXPECT_EQ(result.rows[0].status, "ok");
  EXPECT_EQ(result.best.size(), 1u);
}

TEST(RunBenchmark, RowLayoutAndDeterminism) {
  const auto data = small_problem(2);
  const auto c = small_config();
  const auto splits = make_splits(40, 0.1, c.splits, 5);
  const auto a = run_benchmark(data, c, splits);
  ASSERT_EQ(a.rows.size(), (1 + 2) * 3u);
  EXPECT_EQ(a.best.size(), 2u * 3u);
  EXPECT_EQ(a.rows[0].method, "msa");
  EXPECT_EQ(a.rows[3].method, "ridge_S");
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(a.rows[s].seed, splits[s].seed);
  const auto b = run_benchmark(data, c, splits);
  std::stringstream sa, sb;
  write_results_csv(sa, a.rows);
  write_results_csv(sb, b.rows);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(RunBenchmark, ParallelMatchesSerial) {
  const auto data = small_problem(3);
  auto c = small_config();
  const auto splits = make_splits(40, 0.1, c.splits, 6);
  const auto serial = run_benchmark(data, c, splits);
  c.jobs = 3;
  const auto parallel = run_benchmark(data, c, splits);
  std::stringstream a, b;
  write_results_csv(a, serial.rows);
  write_results_csv(b, parallel.rows);
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunBenchmark, BestPointMinimizesMeanMae) {
  const auto data = small_problem(4);
  auto c = small_config();
  c.methods = {"ridge_S"};
  c.grid.ridge = {1e-4, 1.0, 1e4};
  const auto r = run_benchmark(data, c, make_splits(40, 0.1, 3, 0));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < 3; ++p) {
    double s = 0;
    for (std::size_t k = 0; k < 3; ++k) s += r.rows[p * 3 + k].mae;
    best = std::min(best, s / 3);
  }
  double chosen = 0;
  for (const auto& row : r.best) chosen += row.mae;
  EXPECT_NEAR(chosen / 3, best, 1e-15);
}

TEST(RunOne, FailureIsRecordedInStatus) {
  const auto data = small_problem(5);
  auto c = small_config();
  const auto split = make_splits(40, 0.1, 1, 0)[0];
  // A zero ridge on rank-deficient recentered features has no unique solution.
  const auto row = run_one(data, "ridge_Tl", {kMissing, kMissing, 0.0, -1}, split, c);
  EXPECT_NE(row.status, "ok");
  EXPECT_TRUE(std::isnan(row.mae));
}

TEST(Ablate, FullVersusFullIsIdentical) {
  const auto data = small_problem(6);
  const auto c = small_config();
  const auto splits = make_splits(40, 0.1, 2, 1);
  const auto r = ablate(data, c, splits);
  ASSERT_EQ(r.best.size(), 4u * 2u);
  const auto again = ablate(data, c, splits);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(r.best[i].mae, again.best[i].mae);
  auto zero = c;
  zero.grid.rho = {0.0};
  EXPECT_THROW(ablate(data, zero, splits), ValidationError);
}

TEST(Sensitivity, KeepsEveryGridPoint) {
  const auto data = small_problem(7);
  auto c = small_config();
  c.grid.gamma = {0.1, 1.0};
  const auto rows = sensitivity(data, c, make_splits(40, 0.1, 2, 1));
  EXPECT_EQ(rows.size(), 2u * 2u);
  for (const auto& r : rows) EXPECT_EQ(r.method, "msa");
}

TEST(PiPairQuality, PerfectPairing) {
  Vector y(3);
  y << 0.1, 0.5, 0.9;
  Vector yt(3);
  yt << 0.5, 0.9, 0.1;
  const auto plan = ot::TransportPlan::from_assignment({2, 0, 1});
  EXPECT_NEAR(pi_pair_quality(plan, y, yt, {0.0})[0], 1.0, 1e-15);
}

TEST(PiPairQuality, InfiniteThreshold) {
  std::mt19937_64 rng(8);
  const auto plan = ot::solve_ot(msa::testing::random_matrix(5, 7, rng).cwiseAbs());
  const auto q = pi_pair_quality(plan, msa::testing::random_vector(5, rng), msa::testing::random_vector(7, rng),
                                 {std::numeric_limits<double>::infinity()});
  EXPECT_NEAR(q[0], 1.0, 1e-12);
}

TEST(PiPairQuality, UniformPlanMonteCarlo) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector ys(300), yt(300);
  for (Index i = 0; i < 300; ++i) {
    ys[i] = u(rng);
    yt[i] = u(rng);
  }
  const ot::TransportPlan uniform(Matrix::Constant(300, 300, 1.0 / (300.0 * 300.0)));
  EXPECT_NEAR(pi_pair_quality(uniform, ys, yt, {0.1})[0], 0.19, 0.03);
}

TEST(PiQuality, RowsPerSplitAndThreshold) {
  const auto data = small_problem(10);
  MsaConfig cfg;
  cfg.rank = 2;
  cfg.max_iter = 20;
  const auto rows = pi_quality(data, cfg, make_splits(40, 0.1, 2, 0), {0.1, 0.5});
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_GE(r.initial, 0.0);
    EXPECT_LE(r.final, 1.0 + 1e-12);
  }
}

TEST(ParallelFor, RethrowsFirstFailure) {
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 4) throw ValidationError("boom");
               }),
               ValidationError);
  std::vector<int> hits(20, 0);
  parallel_for(20, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
