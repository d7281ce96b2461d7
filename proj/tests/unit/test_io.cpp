#include <gtest/gtest.h>

#include <clocale>
#include <cmath>
#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "msa/errors.hpp"
#include "msa/io.hpp"
#include "test_support.hpp"

namespace {

using namespace msa;
namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("msa_io_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

synth::DomainPair small_pair() {
  synth::MixingSpec spec;
  spec.p = 4;
  spec.q = 2;
  spec.n = spec.m = 20;
  spec.target_shift = 0.4;
  spec.seed = 3;
  return synth::generate_pair(spec);
}

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, (i % 40) - 20);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_TRUE(std::isnan(io::parse_double("nan")));
  EXPECT_EQ(io::parse_double(" 1.25\r"), 1.25);
}

TEST(FormatDouble, RejectsGarbage) {
  EXPECT_THROW(io::parse_double("1,5"), ValidationError);
  EXPECT_THROW(io::parse_double("abc"), ValidationError);
  EXPECT_THROW(io::parse_double(""), ValidationError);
}

TEST(FormatDouble, IgnoresLocale) {
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) GTEST_SKIP() << "locale unavailable";
  EXPECT_EQ(io::format_double(1.5), "1.5");
  EXPECT_EQ(io::parse_double("2.25"), 2.25);
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST_F(TempDir, MatrixCsvRoundTrip) {
  std::mt19937_64 rng(2);
  const Matrix m = msa::testing::random_matrix(5, 3, rng) * 1e-7;
  io::write_matrix_csv(dir_ / "m.csv", m);
  EXPECT_EQ(io::read_matrix_csv(dir_ / "m.csv"), m);
  io::write_text(dir_ / "ragged.csv", "1,2\n3\n");
  EXPECT_THROW(io::read_matrix_csv(dir_ / "ragged.csv"), ValidationError);
  EXPECT_THROW(io::read_matrix_csv(dir_ / "missing.csv"), ValidationError);
}

TEST_F(TempDir, DatasetRoundTrip) {
  const auto pair = small_pair();
  auto data = pair.to_dataset();
  data.target.labels[1] = std::nan("");
  data.target.labeled[1] = false;
  io::save_dataset(data, dir_ / "data");
  const auto back = io::load_dataset(dir_ / "data");
  ASSERT_EQ(back.source.size(), 20);
  for (Index i = 0; i < 20; ++i) {
    const auto k = static_cast<std::size_t>(i);
    EXPECT_LE((back.source.bands[0][k].matrix() - data.source.bands[0][k].matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((back.target.bands[0][k].matrix() - data.target.bands[0][k].matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_TRUE(std::isnan(back.target.labels[1]));
  EXPECT_EQ(back.target.labeled, data.target.labeled);
  EXPECT_EQ(back.source.labels, data.source.labels);
  EXPECT_EQ(back.task, data.task);
}

TEST_F(TempDir, MultiBandDataset) {
  const auto pair = small_pair();
  auto data = pair.to_dataset();
  data.source.bands.push_back(data.source.bands[0]);
  data.target.bands.push_back(data.target.bands[0]);
  io::save_dataset(data, dir_ / "bands");
  EXPECT_TRUE(fs::exists(dir_ / "bands" / "source" / "cov_00003_band1.csv"));
  EXPECT_EQ(io::load_dataset(dir_ / "bands").source.band_count(), 2);
}

TEST_F(TempDir, ModelRoundTrip) {
  const auto pair = small_pair();
  const auto prepared = experiments::prepare(pair.to_dataset());
  const auto data = msa::testing::msa_data(prepared, {0, 3, 5});
  MsaConfig cfg;
  cfg.rank = 2;
  cfg.max_iter = 15;
  cfg.gamma = 0.3;
  auto model = fit(data, cfg);
  model.source_means = prepared.recentered.source_means;
  model.target_means = prepared.recentered.target_means;
  io::save_model(model, dir_ / "model");
  const auto back = io::load_model(dir_ / "model");
  EXPECT_LE((back.target_basis.matrix() - model.target_basis.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((back.plan.matrix() - model.plan.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.predictor.weights, model.predictor.weights);
  EXPECT_EQ(back.predictor.intercept, model.predictor.intercept);
  EXPECT_EQ(back.best_iteration, model.best_iteration);
  EXPECT_EQ(back.trace.size(), model.trace.size());
  EXPECT_EQ(back.trace.back().terms.total, model.trace.back().terms.total);
  EXPECT_EQ(back.config.gamma, 0.3);
  const auto& covs = pair.target_covs;
  EXPECT_LT((predict_covariances(back, {covs}) - predict(model, prepared.recentered.target)).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST_F(TempDir, StiefelSidecarChecksShape) {
  std::mt19937_64 rng(4);
  const stiefel::StiefelPoint u(msa::testing::random_orthonormal(6, 2, rng));
  io::save_stiefel(u, dir_ / "u.csv");
  EXPECT_EQ(io::load_stiefel(dir_ / "u.csv").rank(), 2);
  io::write_text(dir_ / "u.json", R"({"d": 6, "q": 3, "vech_ordering": "upper-row-major-sqrt2"})");
  EXPECT_THROW(io::load_stiefel(dir_ / "u.csv"), ValidationError);
}

TEST(Configs, MixingSpecRoundTrip) {
  synth::MixingSpec s;
  s.p = 7;
  s.q = 3;
  s.n = s.m = 50;
  s.target_shift = 0.25;
  s.beta = Vector::LinSpaced(4, -1, 1);
  s.task = Task::classification;
  s.seed = 99;
  const auto back = io::parse_mixing_spec(io::to_json(s));
  EXPECT_EQ(back.p, 7);
  EXPECT_EQ(back.target_shift, 0.25);
  EXPECT_EQ(back.beta, s.beta);
  EXPECT_EQ(back.task, Task::classification);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(io::parse_mixing_spec(R"({"n": 30})").m, 30);
}

TEST(Configs, UnknownKeysRejected) {
  EXPECT_THROW(io::parse_mixing_spec(R"({"pp": 3})"), ValidationError);
  EXPECT_THROW(io::parse_msa_config(R"({"gama": 1})"), ValidationError);
  EXPECT_THROW(io::parse_benchmark_config(R"({"grid": {"gama": [1]}})"), ValidationError);
  EXPECT_THROW(io::parse_msa_config("{"), ValidationError);
  EXPECT_THROW(io::parse_msa_config(R"({"rank": "three"})"), ValidationError);
  EXPECT_THROW(io::parse_msa_config(R"({"rank": 0})"), ValidationError);
}

TEST(Configs, MsaAndBenchmarkRoundTrip) {
  MsaConfig c;
  c.rank = 5;
  c.gamma = 0.01;
  c.adam.lr = 3e-3;
  c.ot_weight = 0.0;
  const auto back = io::parse_msa_config(io::to_json(c));
  EXPECT_EQ(back.rank, 5);
  EXPECT_EQ(back.adam.lr, 3e-3);
  EXPECT_EQ(back.ot_weight, 0.0);

  experiments::BenchmarkConfig b;
  b.methods = {"msa", "ridge_Tl"};
  b.grid.rho = {0.5};
  b.splits = 7;
  b.record_wall_time = false;
  const auto bb = io::parse_benchmark_config(io::to_json(b));
  EXPECT_EQ(bb.methods, b.methods);
  EXPECT_EQ(bb.grid.rho, b.grid.rho);
  EXPECT_EQ(bb.splits, 7);
  EXPECT_FALSE(bb.record_wall_time);
}

TEST_F(TempDir, ContentHash) {
  fs::create_directories(dir_ / "a" / "sub");
  io::write_text(dir_ / "a" / "x.txt", "hello\n");
  io::write_text(dir_ / "a" / "sub" / "y.txt", "world\n");
  const std::string h1 = io::content_hash(dir_ / "a");
  EXPECT_EQ(h1.size(), 40u);
  EXPECT_EQ(io::content_hash(dir_ / "a"), h1);
  fs::copy(dir_ / "a", dir_ / "b", fs::copy_options::recursive);
  EXPECT_EQ(io::content_hash(dir_ / "b"), h1);
  io::write_text(dir_ / "b" / "x.txt", "hello!\n");
  EXPECT_NE(io::content_hash(dir_ / "b"), h1);
}

TEST_F(TempDir, ContentHashMatchesGitBlobListing) {
  // git hash-object of an empty file is e69de29b...; the directory digest is
  // SHA-1 of the single listing line.
  io::write_text(dir_ / "empty", "");
  EXPECT_EQ(io::content_hash(dir_), "c9699afc1b612fdb332d1ef87448e63dfbbc76a8");
}

TEST_F(TempDir, ManifestAndResults) {
  io::write_text(dir_ / "data" / "f.txt", "x");
  io::write_manifest(dir_ / "out", "msa benchmark", R"({"splits": 3})", dir_ / "data");
  const std::string text = io::read_text(dir_ / "out" / "manifest.json");
  EXPECT_NE(text.find("dataset_hash"), std::string::npos);
  EXPECT_NE(text.find(io::kToolVersion), std::string::npos);
  std::vector<experiments::ResultRow> rows(1);
  rows[0].method = "msa";
  rows[0].mae = 0.25;
  io::write_results(dir_ / "out" / "results.csv", rows);
  EXPECT_EQ(io::read_results(dir_ / "out" / "results.csv")[0].mae, 0.25);
}

}  // namespace
