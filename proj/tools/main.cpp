#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "msa/baselines.hpp"
#include "msa/dataset.hpp"
#include "msa/errors.hpp"
#include "msa/experiments.hpp"
#include "msa/io.hpp"
#include "msa/msa.hpp"
#include "msa/synth.hpp"

namespace fs = std::filesystem;
using namespace msa;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

struct Options {
  std::string data;
  std::string out;
  std::string config;
  std::string spec;
  std::string model;
  std::string method;
  std::string mode = "per_domain_mean";
  std::vector<double> thresholds;
  double ridge = 1e-2;
  double sigma2 = 1.0;
  double fraction = 0.1;
  int splits = 100;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool verbose = false;
};

std::string shell_command(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) out += ' ';
    out += argv[i];
  }
  return out;
}

std::string absolute_string(const std::string& path) {
  return fs::absolute(fs::path(path)).lexically_normal().generic_string();
}

std::string prediction_csv(const std::vector<Index>& rows, const Vector& predictions,
                           const Vector& labels) {
  std::ostringstream os;
  os << "index,prediction,label\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    os << i << ',' << io::format_double(predictions[i]) << ',';
    if (std::isfinite(labels[i])) os << io::format_double(labels[i]);
    os << '\n';
  }
  return os.str();
}

MsaData msa_data_from(const Dataset& data, const EmbeddedPair& embedded) {
  if (!data.source.labeled_indices().size() ||
      data.source.labeled_indices().size() != static_cast<std::size_t>(data.source.size())) {
    throw ValidationError("fit: every source sample must be labeled");
  }
  MsaData out;
  out.source = embedded.source;
  out.source_labels = data.source.labels;
  out.target = embedded.target;
  out.labeled = data.target.labeled_indices();
  out.target_labels.resize(static_cast<Index>(out.labeled.size()));
  for (std::size_t k = 0; k < out.labeled.size(); ++k) {
    out.target_labels[static_cast<Index>(k)] = data.target.labels[out.labeled[k]];
  }
  out.task = data.task;
  return out;
}

std::string benchmark_config_text(const Options& o, bool seed_given, bool jobs_given,
                                  experiments::BenchmarkConfig& config) {
  if (!o.config.empty()) config = io::parse_benchmark_config(io::read_text(o.config));
  if (seed_given) config.master_seed = o.seed;
  if (jobs_given) config.jobs = o.jobs;
  config.validate();
  return io::to_json(config);
}

void print_best(const experiments::BenchmarkResult& result) {
  std::string current;
  double sum = 0.0;
  int count = 0;
  auto flush = [&] {
    if (count > 0) std::cout << current << " mean_mae " << io::format_double(sum / count) << '\n';
  };
  for (const auto& row : result.best) {
    if (row.method != current) {
      flush();
      current = row.method;
      sum = 0.0;
      count = 0;
    }
    if (row.status == "ok") {
      sum += row.mae;
      ++count;
    }
  }
  flush();
}

int cmd_generate(const Options& o, bool seed_given, const std::string& command) {
  synth::MixingSpec spec;
  if (!o.spec.empty()) spec = io::parse_mixing_spec(io::read_text(o.spec));
  if (seed_given) spec.seed = o.seed;
  const auto pair = synth::generate_pair(spec);
  io::save_dataset(pair.to_dataset(), o.out);
  io::save_truth(pair, o.out);
  io::write_manifest(o.out, command, io::to_json(pair.spec), {});
  return 0;
}

int cmd_embed(const Options& o, const std::string& command) {
  const Dataset data = io::load_dataset(o.data);
  EmbeddingMode mode;
  if (o.mode == "global_mean") {
    mode = EmbeddingMode::global_mean;
  } else if (o.mode == "per_domain_mean") {
    mode = EmbeddingMode::per_domain_mean;
  } else {
    throw ValidationError("embed: unknown mode '" + o.mode + "'");
  }
  io::save_embedding(embed_pair(data, mode), o.out);
  io::write_manifest(o.out, command, "{\"mode\": \"" + o.mode + "\"}", o.data);
  return 0;
}

int cmd_fit(const Options& o, bool seed_given, const std::string& command) {
  const Dataset data = io::load_dataset(o.data);
  MsaConfig config;
  if (!o.config.empty()) config = io::parse_msa_config(io::read_text(o.config));
  if (seed_given) config.seed = o.seed;
  config.task = data.task;
  const EmbeddedPair embedded = embed_pair(data, EmbeddingMode::per_domain_mean);
  MsaModel model = fit(msa_data_from(data, embedded), config);
  model.source_means = embedded.source_means;
  model.target_means = embedded.target_means;
  if (o.verbose) {
    for (const auto& r : model.trace) {
      std::cerr << "iter " << r.iteration << " total " << io::format_double(r.terms.total) << '\n';
    }
  }
  io::save_model(model, o.out);
  io::write_manifest(o.out, command, io::to_json(config), absolute_string(o.data));
  return 0;
}

std::string dataset_from_manifest(const fs::path& model_dir) {
  const auto manifest = nlohmann::json::parse(io::read_text(model_dir / "manifest.json"));
  if (!manifest.contains("dataset")) throw ValidationError("predict: model manifest names no dataset");
  return manifest.at("dataset").get<std::string>();
}

int cmd_predict(const Options& o, const std::string& command) {
  const MsaModel model = io::load_model(o.model);
  const std::string data_dir = o.data.empty() ? dataset_from_manifest(o.model) : o.data;
  const Dataset data = io::load_dataset(data_dir);
  const Vector predictions = predict_covariances(model, data.target.bands);
  io::write_text(o.out, prediction_csv(data.target.unlabeled_indices(), predictions, data.target.labels));
  const fs::path out(o.out);
  io::write_manifest(out.parent_path().empty() ? fs::path(".") : out.parent_path(), command,
                     io::to_json(model.config), data_dir);
  return 0;
}

int cmd_baseline(const Options& o, const std::string& command) {
  const Dataset data = io::load_dataset(o.data);
  baselines::BaselineSpec spec;
  spec.method = baselines::parse_method(o.method);
  spec.ridge = o.ridge;
  spec.sigma2 = o.sigma2;
  const EmbeddedPair embedded = embed_pair(data, baselines::embedding_mode(spec.method));
  baselines::LabeledSplit split{data.source.labels, data.target.labels,
                                data.target.labeled_indices(), data.task};
  const Vector predictions = baselines::run_baseline(spec, embedded, split);
  fs::create_directories(o.out);
  io::write_text(fs::path(o.out) / "predictions.csv",
                 prediction_csv(data.target.unlabeled_indices(), predictions, data.target.labels));
  std::ostringstream config;
  config << "{\"method\": \"" << baselines::to_string(spec.method)
         << "\", \"ridge\": " << io::format_double(spec.ridge)
         << ", \"sigma2\": " << io::format_double(spec.sigma2) << "}";
  io::write_manifest(o.out, command, config.str(), o.data);
  return 0;
}

enum class Sweep { benchmark, ablate, sensitivity };

int cmd_sweep(Sweep kind, const Options& o, bool seed_given, bool jobs_given,
              const std::string& command) {
  experiments::BenchmarkConfig config;
  const std::string config_text = benchmark_config_text(o, seed_given, jobs_given, config);
  const auto prepared = experiments::prepare(io::load_dataset(o.data), config.mean);
  const auto splits = experiments::make_splits(prepared.target_labels.size(), config.fraction,
                                               config.splits, config.master_seed);
  fs::create_directories(o.out);
  const fs::path out(o.out);
  if (kind == Sweep::sensitivity) {
    io::write_results(out / "results.csv", experiments::sensitivity(prepared, config, splits));
  } else {
    const auto result = kind == Sweep::benchmark
                            ? experiments::run_benchmark(prepared, config, splits)
                            : experiments::ablate(prepared, config, splits);
    io::write_results(out / "results.csv", result.rows);
    io::write_results(out / "best.csv", result.best);
    print_best(result);
  }
  io::write_manifest(out, command, config_text, o.data);
  return 0;
}

int cmd_pi_quality(const Options& o, bool seed_given, bool jobs_given, const std::string& command) {
  MsaConfig config;
  if (!o.config.empty()) config = io::parse_msa_config(io::read_text(o.config));
  const auto prepared = experiments::prepare(io::load_dataset(o.data));
  config.task = prepared.task;
  const std::uint64_t seed = seed_given ? o.seed : 0;
  const auto splits =
      experiments::make_splits(prepared.target_labels.size(), o.fraction, o.splits, seed);
  std::vector<double> thresholds = o.thresholds;
  if (thresholds.empty()) {
    const double range = prepared.target_labels.maxCoeff() - prepared.target_labels.minCoeff();
    thresholds = {0.1 * range};
  }
  const auto rows = experiments::pi_quality(prepared, config, splits, thresholds,
                                            jobs_given ? o.jobs : 1);
  std::ostringstream os;
  os << "seed,threshold,initial,final\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << io::format_double(r.threshold) << ',' << io::format_double(r.initial)
       << ',' << io::format_double(r.final) << '\n';
  }
  fs::create_directories(o.out);
  io::write_text(fs::path(o.out) / "pi_quality.csv", os.str());
  io::write_manifest(o.out, command, io::to_json(config), o.data);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-source alignment of SPD covariance domains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kToolVersion));
  Options o;

  auto add_data = [&](CLI::App* sub) { sub->add_option("--data", o.data, "dataset directory")->required(); };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "output path")->required(); };
  auto add_seed = [&](CLI::App* sub) { return sub->add_option("--seed", o.seed, "master seed"); };
  auto add_jobs = [&](CLI::App* sub) {
    return sub->add_option("--jobs", o.jobs, "worker threads")->envname("MSA_JOBS")->check(CLI::PositiveNumber);
  };

  auto* generate = app.add_subcommand("generate", "synthetic domain pair");
  generate->add_option("--spec", o.spec, "mixing spec JSON");
  add_out(generate);
  auto* generate_seed = add_seed(generate);

  auto* embed = app.add_subcommand("embed", "tangent-space embeddings");
  add_data(embed);
  add_out(embed);
  embed->add_option("--mode", o.mode, "global_mean or per_domain_mean");

  auto* fit_cmd = app.add_subcommand("fit", "fit an MSA model");
  add_data(fit_cmd);
  fit_cmd->add_option("--config", o.config, "MSA config JSON");
  add_out(fit_cmd);
  auto* fit_seed = add_seed(fit_cmd);
  fit_cmd->add_flag("--verbose", o.verbose, "log one line per iteration");

  auto* predict_cmd = app.add_subcommand("predict", "predict unlabeled target samples");
  predict_cmd->add_option("--model", o.model, "model directory")->required();
  predict_cmd->add_option("--data", o.data, "dataset directory (default: the fitted one)");
  add_out(predict_cmd);

  auto* baseline = app.add_subcommand("baseline", "run one baseline");
  add_data(baseline);
  baseline->add_option("--method", o.method, "baseline tag")->required();
  baseline->add_option("--ridge", o.ridge, "penalty");
  baseline->add_option("--sigma2", o.sigma2, "RBF bandwidth");
  add_out(baseline);

  std::vector<std::pair<CLI::App*, Sweep>> sweeps;
  std::vector<CLI::Option*> sweep_seeds;
  std::vector<CLI::Option*> sweep_jobs;
  for (auto [name, kind] : {std::pair{"benchmark", Sweep::benchmark},
                            std::pair{"ablate", Sweep::ablate},
                            std::pair{"sensitivity", Sweep::sensitivity}}) {
    auto* sub = app.add_subcommand(name, std::string(name) + " over splits and grids");
    add_data(sub);
    sub->add_option("--config", o.config, "benchmark config JSON");
    add_out(sub);
    sweep_seeds.push_back(add_seed(sub));
    sweep_jobs.push_back(add_jobs(sub));
    sweeps.emplace_back(sub, kind);
  }

  auto* pi = app.add_subcommand("pi-quality", "transport pairing quality before and after fitting");
  add_data(pi);
  pi->add_option("--config", o.config, "MSA config JSON");
  pi->add_option("--splits", o.splits, "number of splits")->check(CLI::PositiveNumber);
  pi->add_option("--fraction", o.fraction, "labeled target fraction");
  pi->add_option("--threshold", o.thresholds, "label-gap thresholds (default 0.1 x label range)");
  add_out(pi);
  auto* pi_seed = add_seed(pi);
  auto* pi_jobs = add_jobs(pi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  const std::string command = shell_command(argc, argv);
  try {
    if (*generate) return cmd_generate(o, generate_seed->count() > 0, command);
    if (*embed) return cmd_embed(o, command);
    if (*fit_cmd) return cmd_fit(o, fit_seed->count() > 0, command);
    if (*predict_cmd) return cmd_predict(o, command);
    if (*baseline) return cmd_baseline(o, command);
    for (std::size_t k = 0; k < sweeps.size(); ++k) {
      if (*sweeps[k].first) {
        return cmd_sweep(sweeps[k].second, o, sweep_seeds[k]->count() > 0,
                         sweep_jobs[k]->count() > 0 || std::getenv("MSA_JOBS") != nullptr, command);
      }
    }
    if (*pi) {
      return cmd_pi_quality(o, pi_seed->count() > 0,
                            pi_jobs->count() > 0 || std::getenv("MSA_JOBS") != nullptr, command);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}
