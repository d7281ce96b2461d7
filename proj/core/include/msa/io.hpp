#pragma once

// Persistence: numeric CSVs (17 significant digits, '.' decimal), JSON
// configs, dataset and model directories, result manifests.

#include <filesystem>
#include <string>
#include <vector>

#include "msa/dataset.hpp"
#include "msa/experiments.hpp"
#include "msa/msa.hpp"
#include "msa/synth.hpp"

namespace msa::io {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kVechOrdering = "upper-row-major-sqrt2";

/// Shortest round-trip-safe text with 17 significant digits; NaN as "nan".
std::string format_double(double v);
/// Locale-independent parse. Throws ValidationError.
double parse_double(std::string_view text);

void write_matrix_csv(const fs::path& path, const Matrix& m);
/// Throws ValidationError on ragged rows or bad numbers.
Matrix read_matrix_csv(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// Dataset layout: <dir>/dataset.json, <dir>/{source,target}/meta.json and
// one CSV per covariance, cov_{i:05}.csv (single band) or
// cov_{i:05}_band{b}.csv.
void save_dataset(const Dataset& data, const fs::path& dir);
Dataset load_dataset(const fs::path& dir);

/// <dir>/truth.json: variances, permutation, beta and the resolved spec.
void save_truth(const synth::DomainPair& pair, const fs::path& dir);

void save_stiefel(const stiefel::StiefelPoint& u, const fs::path& csv_path);
stiefel::StiefelPoint load_stiefel(const fs::path& csv_path);

void save_plan(const ot::TransportPlan& plan, double objective, const fs::path& csv_path);
ot::TransportPlan load_plan(const fs::path& csv_path);

void save_model(const MsaModel& model, const fs::path& dir);
MsaModel load_model(const fs::path& dir);

/// Embeddings of both domains as <dir>/source_embedding.csv and
/// <dir>/target_embedding.csv plus base means.
void save_embedding(const EmbeddedPair& embedding, const fs::path& dir);

// JSON configs. Unknown keys are rejected; missing keys keep defaults.
synth::MixingSpec parse_mixing_spec(const std::string& json_text);
std::string to_json(const synth::MixingSpec& spec);
MsaConfig parse_msa_config(const std::string& json_text);
std::string to_json(const MsaConfig& config);
experiments::BenchmarkConfig parse_benchmark_config(const std::string& json_text);
std::string to_json(const experiments::BenchmarkConfig& config);

/// SHA-1 over the sorted (relative path, git blob hash) list of every
/// regular file below `dir`, in hex.
std::string content_hash(const fs::path& dir);

/// <out>/manifest.json with the command, its config, the dataset hash (when
/// a dataset is given) and the tool version.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::string& config_json, const fs::path& dataset_dir);

void write_results(const fs::path& path, const std::vector<experiments::ResultRow>& rows);
std::vector<experiments::ResultRow> read_results(const fs::path& path);

}  // namespace msa::io
