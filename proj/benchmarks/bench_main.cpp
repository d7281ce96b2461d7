// Microbenchmarks of the hot paths: transport solves, Frechet means,
// tangent embeddings and one outer iteration of the fit.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "msa/experiments.hpp"
#include "msa/msa.hpp"
#include "msa/spd_geometry.hpp"
#include "msa/stiefel.hpp"
#include "msa/synth.hpp"
#include "msa/transport.hpp"

namespace {

using namespace msa;

Matrix uniform_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

synth::DomainPair pair_of(Index p, Index q, Index n) {
  synth::MixingSpec spec;
  spec.p = p;
  spec.q = q;
  spec.n = spec.m = n;
  spec.target_shift = 0.3;
  spec.seed = 1;
  return synth::generate_pair(spec);
}

void BM_SolveOt(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix x = uniform_matrix(n, 3, 1), y = uniform_matrix(n, 3, 2);
  const Matrix cost = ot::cost_matrix(x, y);
  for (auto _ : state) benchmark::DoNotOptimize(ot::solve_ot(cost));
  state.SetComplexityN(n);
}
BENCHMARK(BM_SolveOt)->RangeMultiplier(2)->Range(32, 512)->Complexity();

// Consecutive solves on slowly drifting costs, as in the fit loop.
void BM_SolveOtWarm(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix x = uniform_matrix(n, 3, 1), y = uniform_matrix(n, 3, 2);
  const Matrix drift = 1e-3 * uniform_matrix(n, 3, 3);
  ot::NetworkSimplex solver;
  int k = 0;
  for (auto _ : state) {
    const Matrix cost = ot::cost_matrix(x + (k++ % 8) * drift, y);
    benchmark::DoNotOptimize(solver.solve(cost));
  }
}
BENCHMARK(BM_SolveOtWarm)->Arg(128)->Arg(512);

void BM_RiemannianMean(benchmark::State& state) {
  const auto pair = pair_of(state.range(0), 3, 300);
  for (auto _ : state) benchmark::DoNotOptimize(spd::riemannian_mean(pair.source_covs));
}
BENCHMARK(BM_RiemannianMean)->Arg(6)->Arg(10)->Arg(20);

void BM_EmbedDataset(benchmark::State& state) {
  const auto pair = pair_of(state.range(0), 3, 300);
  const spd::SpdMatrix base = spd::riemannian_mean(pair.source_covs);
  for (auto _ : state) benchmark::DoNotOptimize(spd::embed_dataset(pair.source_covs, base));
}
BENCHMARK(BM_EmbedDataset)->Arg(6)->Arg(10)->Arg(20);

// One outer iteration: inner solve, gradient and two Adam steps.
void BM_FitIteration(benchmark::State& state) {
  const Index n = state.range(0);
  const auto pair = pair_of(10, 3, n);
  const auto prepared = experiments::prepare(pair.to_dataset());
  MsaData data;
  data.source = prepared.recentered.source;
  data.source_labels = prepared.source_labels;
  data.target = prepared.recentered.target;
  for (Index j = 0; j < n / 10; ++j) data.labeled.push_back(j);
  data.target_labels = prepared.target_labels.head(n / 10);
  MsaConfig cfg;
  cfg.rank = 3;
  const Objective objective(data, cfg);
  const auto start = initial_basis(data, cfg.rank);
  stiefel::StiefelPoint us = start, ut = start;
  stiefel::AdamState ss(us.ambient_dim(), cfg.rank, cfg.adam), st(ut.ambient_dim(), cfg.rank, cfg.adam);
  ot::NetworkSimplex warm;
  for (auto _ : state) {
    const auto inner = objective.inner_solve(us.matrix(), ut.matrix(), &warm);
    const auto g = objective.gradient(us.matrix(), ut.matrix(), inner.beta, inner.plan);
    std::tie(ss, us) = stiefel::adam_step(std::move(ss), us, g.source);
    std::tie(st, ut) = stiefel::adam_step(std::move(st), ut, g.target);
  }
}
BENCHMARK(BM_FitIteration)->Arg(100)->Arg(300);

}  // namespace

BENCHMARK_MAIN();
