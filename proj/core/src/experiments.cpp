#include "msa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "msa/errors.hpp"

namespace msa::experiments {
namespace {

std::mt19937_64 split_rng(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// log C(m, k) >= log(count), evaluated in floating point
bool enough_subsets(Index m, Index k, int count) {
  const double log_binom = std::lgamma(static_cast<double>(m) + 1) -
                           std::lgamma(static_cast<double>(k) + 1) -
                           std::lgamma(static_cast<double>(m - k) + 1);
  return log_binom >= std::log(static_cast<double>(count)) - 1e-9;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

double parse_number(const std::string& field) {
  if (field.empty()) return kMissing;
  std::istringstream is(field);
  is.imbue(std::locale::classic());
  double v = 0.0;
  is >> v;
  if (is.fail() || !is.eof()) throw ValidationError("results CSV: bad number '" + field + "'");
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

enum class MsaVariant { full, no_grassmann, no_ot, no_similarity, no_metric };

const std::map<std::string, MsaVariant>& msa_variants() {
  static const std::map<std::string, MsaVariant> variants{
      {"msa", MsaVariant::full},
      {"msa_no_grassmann", MsaVariant::no_grassmann},
      {"msa_no_ot", MsaVariant::no_ot},
      {"msa_no_similarity", MsaVariant::no_similarity},
      {"msa_no_metric", MsaVariant::no_metric},
  };
  return variants;
}

Vector select(const Vector& y, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = y[idx[i]];
  return out;
}

MsaData msa_data(const PreparedData& data, const SplitMask& split) {
  MsaData out;
  out.source = data.recentered.source;
  out.source_labels = data.source_labels;
  out.target = data.recentered.target;
  out.labeled = split.labeled;
  out.target_labels = select(data.target_labels, split.labeled);
  out.task = data.task;
  return out;
}

}  // namespace

std::vector<SplitMask> make_splits(Index m, double fraction, int count, std::uint64_t master_seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("make_splits: fraction must lie in (0, 1)");
  }
  if (count < 0) throw ValidationError("make_splits: count must be >= 0");
  const auto k = static_cast<Index>(std::llround(fraction * static_cast<double>(m)));
  if (k < 1) throw ValidationError("make_splits: fraction * m rounds to zero labeled samples");
  if (!enough_subsets(m, k, count)) {
    throw ValidationError("make_splits: fewer distinct masks exist than requested");
  }
  std::vector<SplitMask> out;
  std::set<std::vector<Index>> seen;
  std::uint64_t draw = 0;
  while (static_cast<int>(out.size()) < count) {
    auto rng = split_rng(master_seed, draw);
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> labeled(order.begin(), order.begin() + k);
    std::sort(labeled.begin(), labeled.end());
    if (seen.insert(labeled).second) {
      out.push_back({std::move(labeled), fraction, (master_seed << 20) ^ draw});
    }
    ++draw;
  }
  return out;
}

std::vector<Index> unlabeled_indices(const SplitMask& mask, Index m) {
  std::vector<bool> is_labeled(static_cast<std::size_t>(m), false);
  for (Index i : mask.labeled) {
    if (i < 0 || i >= m) throw ValidationError("unlabeled_indices: mask index out of range");
    is_labeled[static_cast<std::size_t>(i)] = true;
  }
  std::vector<Index> out;
  for (Index i = 0; i < m; ++i) {
    if (!is_labeled[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

Metrics evaluate(const Vector& predictions, const Vector& truth) {
  if (predictions.size() != truth.size()) throw ValidationError("evaluate: length mismatch");
  if (truth.size() == 0) throw ValidationError("evaluate: empty input");
  const double mean = truth.mean();
  const double ss_tot = (truth.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw ValidationError("evaluate: truth has zero variance; R^2 undefined");
  Metrics m;
  m.mae = (predictions - truth).cwiseAbs().mean();
  m.r2 = 1.0 - (predictions - truth).squaredNorm() / ss_tot;
  return m;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.seed << ',' << format_number(r.point.gamma) << ','
        << format_number(r.point.rho) << ',' << format_number(r.point.epsilon) << ','
        << (r.point.q >= 0 ? std::to_string(r.point.q) : std::string()) << ','
        << format_number(r.mae) << ',' << format_number(r.r2) << ','
        << format_number(r.wall_time_s) << ',' << r.status << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw ValidationError("results CSV: unexpected header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw ValidationError("results CSV: expected 10 fields");
    ResultRow r;
    r.method = f[0];
    r.seed = std::stoull(f[1]);
    r.point.gamma = parse_number(f[2]);
    r.point.rho = parse_number(f[3]);
    r.point.epsilon = parse_number(f[4]);
    r.point.q = f[5].empty() ? -1 : std::stoll(f[5]);
    r.mae = parse_number(f[6]);
    r.r2 = parse_number(f[7]);
    r.wall_time_s = parse_number(f[8]);
    r.status = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

bool is_msa_method(const std::string& tag) { return msa_variants().count(tag) > 0; }

void validate_method(const std::string& tag) {
  if (!is_msa_method(tag)) baselines::parse_method(tag);
}

std::vector<HyperPoint> method_grid(const std::string& tag, const GridSpec& grid, Index rank) {
  validate_method(tag);
  std::vector<HyperPoint> out;
  if (is_msa_method(tag)) {
    const MsaVariant variant = msa_variants().at(tag);
    const std::vector<double> zero{0.0};
    const auto& gammas = variant == MsaVariant::no_metric ? zero : grid.gamma;
    const auto& rhos = variant == MsaVariant::no_grassmann ? zero : grid.rho;
    for (double g : gammas) {
      for (double r : rhos) {
        for (double e : grid.epsilon) out.push_back({g, r, e, rank});
      }
    }
    return out;
  }
  if (baselines::parse_method(tag) == baselines::Method::rbf_recenter_both) {
    for (double s : grid.sigma2) {
      for (double e : grid.ridge) out.push_back({s, kMissing, e, -1});
    }
    return out;
  }
  for (double e : grid.ridge) out.push_back({kMissing, kMissing, e, -1});
  return out;
}

MsaConfig msa_config_for(const std::string& tag, const HyperPoint& point, const MsaConfig& base) {
  MsaConfig config = base;
  config.gamma = point.gamma;
  config.rho = point.rho;
  config.epsilon = point.epsilon;
  if (point.q >= 0) config.rank = point.q;
  switch (msa_variants().at(tag)) {
    case MsaVariant::full:
      break;
    case MsaVariant::no_grassmann:
      config.rho = 0.0;
      break;
    case MsaVariant::no_ot:
      config.ot_weight = 0.0;
      break;
    case MsaVariant::no_similarity:
      config.similarity_weight = 0.0;
      break;
    case MsaVariant::no_metric:
      config.gamma = 0.0;
      break;
  }
  return config;
}

void BenchmarkConfig::validate() const {
  if (methods.empty()) throw ValidationError("benchmark: no methods");
  for (const auto& m : methods) validate_method(m);
  std::set<std::string> unique(methods.begin(), methods.end());
  if (unique.size() != methods.size()) throw ValidationError("benchmark: duplicate method tags");
  if (splits < 1) throw ValidationError("benchmark: splits must be >= 1");
  if (jobs < 1) throw ValidationError("benchmark: jobs must be >= 1");
  for (const auto& m : methods) {
    if (method_grid(m, grid, msa.rank).empty()) {
      throw ValidationError("benchmark: empty grid for method " + m);
    }
  }
  msa.validate();
}

PreparedData prepare(const Dataset& data, const spd::MeanOptions& mean) {
  data.validate();
  if (!data.target.labels.allFinite()) {
    throw ValidationError("benchmark: every target label must be known for evaluation");
  }
  PreparedData out;
  out.global = embed_pair(data, EmbeddingMode::global_mean, mean);
  out.recentered = embed_pair(data, EmbeddingMode::per_domain_mean, mean);
  out.source_labels = data.source.labels;
  out.target_labels = data.target.labels;
  out.task = data.task;
  return out;
}

ResultRow run_one(const PreparedData& data, const std::string& method, const HyperPoint& point,
                  const SplitMask& split, const BenchmarkConfig& config) {
  ResultRow row;
  row.method = method;
  row.seed = split.seed;
  row.point = point;
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::vector<Index> unlabeled = unlabeled_indices(split, data.target_labels.size());
    Vector predictions;
    if (is_msa_method(method)) {
      MsaConfig cfg = msa_config_for(method, point, config.msa);
      cfg.seed = split.seed;
      const MsaModel model = fit(msa_data(data, split), cfg);
      predictions = predict(model, data.recentered.target);
    } else {
      baselines::BaselineSpec spec;
      spec.method = baselines::parse_method(method);
      spec.ridge = point.epsilon;
      if (!std::isnan(point.gamma)) spec.sigma2 = point.gamma;
      const EmbeddedPair& embedding = baselines::embedding_mode(spec.method) ==
                                              EmbeddingMode::global_mean
                                          ? data.global
                                          : data.recentered;
      predictions = baselines::run_baseline(
          spec, embedding, {data.source_labels, data.target_labels, split.labeled, data.task});
    }
    const Metrics m = evaluate(select(predictions, unlabeled), select(data.target_labels, unlabeled));
    if (!std::isfinite(m.mae) || !std::isfinite(m.r2)) throw NumericalError("non-finite metrics");
    row.mae = m.mae;
    row.r2 = m.r2;
  } catch (const ValidationError& e) {
    row.status = "validation_error";
    warn(method + " (split " + std::to_string(split.seed) + "): " + e.what());
  } catch (const Error& e) {
    row.status = "numerical_error";
    warn(method + " (split " + std::to_string(split.seed) + "): " + e.what());
  }
  if (config.record_wall_time) {
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

BenchmarkResult run_benchmark(const PreparedData& data, const BenchmarkConfig& config,
                              const std::vector<SplitMask>& splits) {
  config.validate();
  if (splits.empty()) throw ValidationError("benchmark: no splits");
  struct Job {
    const std::string* method;
    HyperPoint point;
    std::size_t split;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<HyperPoint>> grids;
  for (const auto& method : config.methods) {
    grids.push_back(method_grid(method, config.grid, config.msa.rank));
    for (const auto& point : grids.back()) {
      for (std::size_t s = 0; s < splits.size(); ++s) jobs.push_back({&method, point, s});
    }
  }
  BenchmarkResult result;
  result.rows.resize(jobs.size());
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    result.rows[i] = run_one(data, *jobs[i].method, jobs[i].point, splits[jobs[i].split], config);
  });

  // rows are laid out method-major, then point, then split
  std::size_t offset = 0;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const std::size_t per_point = splits.size();
    double best_score = std::numeric_limits<double>::infinity();
    bool best_clean = false;
    std::size_t best_start = offset;
    for (std::size_t p = 0; p < grids[m].size(); ++p) {
      const std::size_t start = offset + p * per_point;
      double sum = 0.0;
      std::size_t ok = 0;
      for (std::size_t s = 0; s < per_point; ++s) {
        const auto& row = result.rows[start + s];
        if (row.status == "ok") {
          sum += row.mae;
          ++ok;
        }
      }
      if (ok == 0) continue;
      const bool clean = ok == per_point;
      const double score = sum / static_cast<double>(ok);
      if ((clean && !best_clean) || (clean == best_clean && score < best_score)) {
        best_score = score;
        best_clean = clean;
        best_start = start;
      }
    }
    for (std::size_t s = 0; s < per_point; ++s) result.best.push_back(result.rows[best_start + s]);
    offset += grids[m].size() * per_point;
  }
  return result;
}

BenchmarkResult ablate(const PreparedData& data, const BenchmarkConfig& config,
                       const std::vector<SplitMask>& splits) {
  BenchmarkConfig ablation = config;
  ablation.methods = {"msa", "msa_no_grassmann", "msa_no_ot", "msa_no_similarity"};
  for (const auto* values : {&config.grid.gamma, &config.grid.rho}) {
    for (double v : *values) {
      if (!(v > 0.0)) throw ValidationError("ablate: gamma and rho grids must be positive");
    }
  }
  return run_benchmark(data, ablation, splits);
}

std::vector<ResultRow> sensitivity(const PreparedData& data, const BenchmarkConfig& config,
                                   const std::vector<SplitMask>& splits) {
  BenchmarkConfig grid_run = config;
  grid_run.methods.clear();
  for (const auto& m : config.methods) {
    if (is_msa_method(m)) grid_run.methods.push_back(m);
  }
  if (grid_run.methods.empty()) grid_run.methods.push_back("msa");
  return run_benchmark(data, grid_run, splits).rows;
}

std::vector<double> pi_pair_quality(const ot::TransportPlan& plan, const Vector& source_labels,
                                    const Vector& target_labels,
                                    const std::vector<double>& thresholds) {
  const Matrix& pi = plan.matrix();
  if (pi.rows() != source_labels.size() || pi.cols() != target_labels.size()) {
    throw ValidationError("pi_pair_quality: plan shape does not match the label counts");
  }
  const double total = pi.sum();
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    double mass = 0.0;
    for (Index j = 0; j < pi.cols(); ++j) {
      for (Index i = 0; i < pi.rows(); ++i) {
        if (std::abs(source_labels[i] - target_labels[j]) <= t) mass += pi(i, j);
      }
    }
    out.push_back(mass / total);
  }
  return out;
}

std::vector<PiQualityRow> pi_quality(const PreparedData& data, const MsaConfig& config,
                                     const std::vector<SplitMask>& splits,
                                     const std::vector<double>& thresholds, int jobs) {
  std::vector<std::vector<PiQualityRow>> per_split(splits.size());
  parallel_for(splits.size(), jobs, [&](std::size_t s) {
    MsaConfig cfg = config;
    cfg.seed = splits[s].seed;
    const MsaModel model = fit(msa_data(data, splits[s]), cfg);
    const auto before =
        pi_pair_quality(model.initial_plan, data.source_labels, data.target_labels, thresholds);
    const auto after =
        pi_pair_quality(model.plan, data.source_labels, data.target_labels, thresholds);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      per_split[s].push_back({splits[s].seed, thresholds[t], before[t], after[t]});
    }
  });
  std::vector<PiQualityRow> out;
  for (auto& rows : per_split) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

}  // namespace msa::experiments
