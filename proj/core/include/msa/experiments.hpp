#pragma once

// Benchmark protocol: label-mask splits, metrics, grid runs over methods and
// hyperparameters with a bounded worker pool, ablations and the transport
// pairing diagnostic.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "msa/baselines.hpp"
#include "msa/dataset.hpp"
#include "msa/msa.hpp"
#include "msa/transport.hpp"

namespace msa::experiments {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct SplitMask {
  std::vector<Index> labeled;  ///< sorted target indices
  double fraction = 0.1;
  std::uint64_t seed = 0;      ///< per-split seed derived from the master seed
};

/// `count` distinct masks of size round(fraction * m). Throws ValidationError
/// when fraction is outside (0, 1), the mask would be empty, or fewer than
/// `count` distinct masks exist.
std::vector<SplitMask> make_splits(Index m, double fraction, int count, std::uint64_t master_seed);

/// Complement of a mask in 0..m-1.
std::vector<Index> unlabeled_indices(const SplitMask& mask, Index m);

struct Metrics {
  double mae = 0.0;
  double r2 = 0.0;
};

/// MAE and R^2 = 1 - SS_res / SS_tot. Throws ValidationError on empty or
/// mismatched input and on zero-variance truth.
Metrics evaluate(const Vector& predictions, const Vector& truth);

/// One point of a hyperparameter grid; unused entries are NaN. For the RBF
/// baseline `gamma` holds the kernel bandwidth sigma^2, for every baseline
/// `epsilon` holds the ridge strength.
struct HyperPoint {
  double gamma = kMissing;
  double rho = kMissing;
  double epsilon = kMissing;
  Index q = -1;
};

struct ResultRow {
  std::string method;
  std::uint64_t seed = 0;
  HyperPoint point;
  double mae = kMissing;
  double r2 = kMissing;
  double wall_time_s = 0.0;
  std::string status = "ok";
};

inline const char* kResultsHeader = "method,seed,gamma,rho,epsilon,q,mae,r2,wall_time_s,status";
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Throws ValidationError on a header or field mismatch.
std::vector<ResultRow> read_results_csv(std::istream& in);

struct GridSpec {
  std::vector<double> gamma{0.01, 0.1, 1.0, 10.0};
  std::vector<double> rho{0.01, 0.1, 1.0, 10.0};
  std::vector<double> epsilon{1e-4, 1e-2, 1.0};
  std::vector<double> ridge{1e-4, 1e-2, 1.0, 1e2};  ///< baseline penalties
  std::vector<double> sigma2{0.1, 1.0, 10.0, 100.0, 1000.0};  ///< RBF bandwidths
};

/// Method tags: the baseline tags plus "msa" and its ablations
/// "msa_no_grassmann", "msa_no_ot", "msa_no_similarity", "msa_no_metric".
bool is_msa_method(const std::string& tag);
/// Throws ValidationError on an unknown tag.
void validate_method(const std::string& tag);
/// Grid points a method is evaluated on.
std::vector<HyperPoint> method_grid(const std::string& tag, const GridSpec& grid, Index rank);
/// Base config with a method's ablation switches and a grid point applied.
MsaConfig msa_config_for(const std::string& tag, const HyperPoint& point, const MsaConfig& base);

struct BenchmarkConfig {
  std::vector<std::string> methods{"msa", "ridge_S", "ridge_Tl", "ridge_recenter_S",
                                   "ridge_recenter_SuT", "rbf_recenter_SuTl"};
  GridSpec grid;
  MsaConfig msa;  ///< rank, iteration limits and Adam settings for every MSA run
  double fraction = 0.1;
  int splits = 100;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  bool record_wall_time = true;
  spd::MeanOptions mean;

  void validate() const;
};

/// Dataset embedded in both modes, with complete target labels.
struct PreparedData {
  EmbeddedPair global;
  EmbeddedPair recentered;
  Vector source_labels;
  Vector target_labels;
  Task task = Task::regression;
};

/// Throws ValidationError when some target label is unknown (the protocol
/// evaluates on every unlabeled target sample).
PreparedData prepare(const Dataset& data, const spd::MeanOptions& mean = {});

struct BenchmarkResult {
  std::vector<ResultRow> rows;  ///< every (method, point, split)
  std::vector<ResultRow> best;  ///< rows of each method's best point
};

/// One run. Failures are reported in the row's status.
ResultRow run_one(const PreparedData& data, const std::string& method, const HyperPoint& point,
                  const SplitMask& split, const BenchmarkConfig& config);

/// Full cross product of methods, grid points and splits. The best point of
/// a method minimizes the mean MAE over splits among points with no failed
/// run (falling back to all points when every point has a failure).
BenchmarkResult run_benchmark(const PreparedData& data, const BenchmarkConfig& config,
                              const std::vector<SplitMask>& splits);

/// Full loss against each single-term removal, each on its own grid.
BenchmarkResult ablate(const PreparedData& data, const BenchmarkConfig& config,
                       const std::vector<SplitMask>& splits);

/// Every grid point of the MSA methods in `config`, without selection.
std::vector<ResultRow> sensitivity(const PreparedData& data, const BenchmarkConfig& config,
                                   const std::vector<SplitMask>& splits);

/// Sum of pi over pairs with |y_s - y_t| <= t, divided by the total mass,
/// for each threshold t.
std::vector<double> pi_pair_quality(const ot::TransportPlan& plan, const Vector& source_labels,
                                    const Vector& target_labels,
                                    const std::vector<double>& thresholds);

struct PiQualityRow {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  double initial = 0.0;  ///< plan of the first iteration
  double final = 0.0;    ///< plan of the returned model
};

/// Transport pairing quality before and after fitting MSA at one point.
std::vector<PiQualityRow> pi_quality(const PreparedData& data, const MsaConfig& config,
                                     const std::vector<SplitMask>& splits,
                                     const std::vector<double>& thresholds, int jobs = 1);

/// Runs task(i) for i in [0, count) on at most `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace msa::experiments
