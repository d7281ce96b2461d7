#include "msa/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "msa/errors.hpp"

namespace msa::io {
namespace {

using json = nlohmann::json;

std::string band_file(Index i, Index band, Index bands) {
  char buf[64];
  if (bands == 1) {
    std::snprintf(buf, sizeof buf, "cov_%05lld.csv", static_cast<long long>(i));
  } else {
    std::snprintf(buf, sizeof buf, "cov_%05lld_band%lld.csv", static_cast<long long>(i),
                  static_cast<long long>(band));
  }
  return buf;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

json read_json(const fs::path& path) { return parse_json(read_text(path), path.string().c_str()); }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected a JSON object");
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!names.count(key)) {
      throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(where) + ": bad value for '" + key + "': " + e.what());
  }
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix json_matrix(const json& j, const char* where) {
  if (!j.is_array()) throw ValidationError(std::string(where) + ": matrix must be an array of rows");
  if (j.empty()) return {};
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(j.front().size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || static_cast<Index>(j[i].size()) != m.cols()) {
      throw ValidationError(std::string(where) + ": ragged matrix");
    }
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      out.push_back(v[i]);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

Vector json_vector(const json& j, const char* where) {
  if (!j.is_array()) throw ValidationError(std::string(where) + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = j[i].is_null() ? std::nan("") : j[i].get<double>();
  }
  return v;
}

Task task_from(const json& j, const char* key, Task fallback) {
  if (!j.contains(key)) return fallback;
  return parse_task(j.at(key).get<std::string>());
}

json adam_json(const stiefel::AdamParams& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

json msa_json(const MsaConfig& c) {
  return {{"rank", c.rank},
          {"gamma", c.gamma},
          {"rho", c.rho},
          {"epsilon", c.epsilon},
          {"task", std::string(to_string(c.task))},
          {"max_iter", c.max_iter},
          {"tolerance", c.tolerance},
          {"window", c.window},
          {"adam", adam_json(c.adam)},
          {"seed", c.seed},
          {"ot_weight", c.ot_weight},
          {"similarity_weight", c.similarity_weight}};
}

MsaConfig msa_from(const json& j) {
  const char* where = "msa config";
  check_keys(j, {"rank", "gamma", "rho", "epsilon", "task", "max_iter", "tolerance", "window",
                 "adam", "seed", "ot_weight", "similarity_weight"},
             where);
  MsaConfig c;
  get_if(j, "rank", c.rank, where);
  get_if(j, "gamma", c.gamma, where);
  get_if(j, "rho", c.rho, where);
  get_if(j, "epsilon", c.epsilon, where);
  c.task = task_from(j, "task", c.task);
  get_if(j, "max_iter", c.max_iter, where);
  get_if(j, "tolerance", c.tolerance, where);
  get_if(j, "window", c.window, where);
  get_if(j, "seed", c.seed, where);
  get_if(j, "ot_weight", c.ot_weight, where);
  get_if(j, "similarity_weight", c.similarity_weight, where);
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    check_keys(a, {"lr", "beta1", "beta2", "eps"}, "adam config");
    get_if(a, "lr", c.adam.lr, where);
    get_if(a, "beta1", c.adam.beta1, where);
    get_if(a, "beta2", c.adam.beta2, where);
    get_if(a, "eps", c.adam.eps, where);
  }
  c.validate();
  return c;
}

std::string hex(const unsigned char* data, unsigned int len) {
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  }
  return os.str();
}

std::string sha1_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha1(), nullptr) != 1) {
    throw Error("content_hash: SHA-1 digest failed");
  }
  return hex(md.data(), len);
}

void write_loss_trace(const fs::path& path, const std::vector<IterationRecord>& trace) {
  std::ostringstream os;
  os << "iteration,supervised,ot,similarity,metric,grassmann,total,post_step_total\n";
  for (const auto& r : trace) {
    os << r.iteration << ',' << format_double(r.terms.supervised) << ','
       << format_double(r.terms.ot) << ',' << format_double(r.terms.similarity) << ','
       << format_double(r.terms.metric) << ',' << format_double(r.terms.grassmann) << ','
       << format_double(r.terms.total) << ',' << format_double(r.post_step_total) << '\n';
  }
  write_text(path, os.str());
}

std::vector<IterationRecord> read_loss_trace(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 8) throw ValidationError("loss trace: expected 8 fields");
    IterationRecord r;
    r.iteration = std::stoi(f[0]);
    r.terms.supervised = parse_double(f[1]);
    r.terms.ot = parse_double(f[2]);
    r.terms.similarity = parse_double(f[3]);
    r.terms.metric = parse_double(f[4]);
    r.terms.grassmann = parse_double(f[5]);
    r.terms.total = parse_double(f[6]);
    r.post_step_total = parse_double(f[7]);
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  const auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t')) {
    text.remove_suffix(1);
  }
  if (text == "nan" || text == "NaN") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("bad number '" + std::string(text) + "'");
  }
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::string text;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

Matrix read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError(path.string() + ": ragged CSV rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void save_dataset(const Dataset& data, const fs::path& dir) {
  data.validate();
  fs::create_directories(dir);
  write_json(dir / "dataset.json", {{"format", "msa-dataset"},
                                    {"task", std::string(to_string(data.task))},
                                    {"bands", data.source.band_count()}});
  for (const auto& [name, domain] :
       {std::pair<const char*, const DomainSamples*>{"source", &data.source},
        std::pair<const char*, const DomainSamples*>{"target", &data.target}}) {
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    json mask = json::array();
    for (bool b : domain->labeled) mask.push_back(b);
    json band_p = json::array();
    for (const auto& band : domain->bands) band_p.push_back(band.front().dim());
    write_json(sub / "meta.json", {{"p", domain->bands.front().front().dim()},
                                   {"n", domain->size()},
                                   {"bands", domain->band_count()},
                                   {"band_p", band_p},
                                   {"labels", vector_json(domain->labels)},
                                   {"labeled_mask", mask}});
    for (Index b = 0; b < domain->band_count(); ++b) {
      for (Index i = 0; i < domain->size(); ++i) {
        write_matrix_csv(sub / band_file(i, b, domain->band_count()),
                         domain->bands[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)]
                             .matrix());
      }
    }
  }
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("dataset directory not found: " + dir.string());
  Dataset data;
  Index bands = 1;
  if (fs::exists(dir / "dataset.json")) {
    const json top = read_json(dir / "dataset.json");
    data.task = task_from(top, "task", Task::regression);
    bands = top.value("bands", Index{1});
  }
  for (const auto& [name, domain] : {std::pair<const char*, DomainSamples*>{"source", &data.source},
                                     std::pair<const char*, DomainSamples*>{"target", &data.target}}) {
    const fs::path sub = dir / name;
    const json meta = read_json(sub / "meta.json");
    const auto n = meta.at("n").get<Index>();
    domain->labels = json_vector(meta.at("labels"), "meta.json labels");
    if (domain->labels.size() != n) throw ValidationError("meta.json: label count differs from n");
    domain->labeled.assign(static_cast<std::size_t>(n), false);
    if (meta.contains("labeled_mask")) {
      const auto& mask = meta.at("labeled_mask");
      if (static_cast<Index>(mask.size()) != n) throw ValidationError("meta.json: mask size differs from n");
      for (std::size_t i = 0; i < mask.size(); ++i) domain->labeled[i] = mask[i].get<bool>();
    } else {
      for (Index i = 0; i < n; ++i) domain->labeled[static_cast<std::size_t>(i)] = std::isfinite(domain->labels[i]);
    }
    const Index domain_bands = meta.value("bands", bands);
    domain->bands.assign(static_cast<std::size_t>(domain_bands), {});
    for (Index b = 0; b < domain_bands; ++b) {
      auto& band = domain->bands[static_cast<std::size_t>(b)];
      band.reserve(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        band.emplace_back(read_matrix_csv(sub / band_file(i, b, domain_bands)));
      }
    }
  }
  data.validate();
  return data;
}

void save_truth(const synth::DomainPair& pair, const fs::path& dir) {
  json perm = json::array();
  for (Index j : pair.permutation) perm.push_back(j);
  write_json(dir / "truth.json", {{"variances", matrix_json(pair.variances)},
                                  {"permutation", perm},
                                  {"beta", vector_json(pair.spec.beta)},
                                  {"spec", parse_json(to_json(pair.spec), "spec")}});
}

void save_stiefel(const stiefel::StiefelPoint& u, const fs::path& csv_path) {
  write_matrix_csv(csv_path, u.matrix());
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  write_json(sidecar, {{"d", u.ambient_dim()}, {"q", u.rank()}, {"vech_ordering", kVechOrdering}});
}

stiefel::StiefelPoint load_stiefel(const fs::path& csv_path) {
  Matrix u = read_matrix_csv(csv_path);
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  if (fs::exists(sidecar)) {
    const json meta = read_json(sidecar);
    if (meta.at("d").get<Index>() != u.rows() || meta.at("q").get<Index>() != u.cols()) {
      throw ValidationError(csv_path.string() + ": shape differs from its sidecar");
    }
    if (meta.value("vech_ordering", std::string(kVechOrdering)) != kVechOrdering) {
      throw ValidationError(csv_path.string() + ": unsupported vech ordering");
    }
  }
  return stiefel::StiefelPoint(std::move(u), 1e-8);
}

void save_plan(const ot::TransportPlan& plan, double objective, const fs::path& csv_path) {
  write_matrix_csv(csv_path, plan.matrix());
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  write_json(sidecar, {{"n", plan.rows()}, {"m", plan.cols()}, {"objective", objective}});
}

ot::TransportPlan load_plan(const fs::path& csv_path) {
  return ot::TransportPlan(read_matrix_csv(csv_path));
}

void save_model(const MsaModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  save_stiefel(model.source_basis, dir / "source_basis.csv");
  save_stiefel(model.target_basis, dir / "target_basis.csv");
  json weights = json::array();
  for (Index i = 0; i < model.predictor.weights.size(); ++i) weights.push_back(model.predictor.weights[i]);
  write_json(dir / "beta.json", {{"beta", weights},
                                 {"beta0", model.predictor.intercept},
                                 {"task", std::string(to_string(model.predictor.task))},
                                 {"d", model.target_basis.ambient_dim()},
                                 {"q", model.target_basis.rank()}});
  const auto best = static_cast<std::size_t>(model.best_iteration);
  const double ot_value = best < model.trace.size() ? model.trace[best].terms.ot : std::nan("");
  const double initial_ot = model.trace.empty() ? std::nan("") : model.trace.front().terms.ot;
  save_plan(model.plan, ot_value, dir / "plan.csv");
  save_plan(model.initial_plan, initial_ot, dir / "initial_plan.csv");
  for (std::size_t b = 0; b < model.source_means.size(); ++b) {
    write_matrix_csv(dir / ("source_mean_band" + std::to_string(b) + ".csv"), model.source_means[b].matrix());
  }
  for (std::size_t b = 0; b < model.target_means.size(); ++b) {
    write_matrix_csv(dir / ("target_mean_band" + std::to_string(b) + ".csv"), model.target_means[b].matrix());
  }
  write_json(dir / "config.json", msa_json(model.config));
  write_loss_trace(dir / "loss_trace.csv", model.trace);
  write_json(dir / "model.json", {{"format", "msa-model"},
                                  {"best_iteration", model.best_iteration},
                                  {"bands", model.target_means.size()}});
}

MsaModel load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("model directory not found: " + dir.string());
  const json meta = read_json(dir / "model.json");
  const json beta = read_json(dir / "beta.json");
  predictors::LinearModel predictor;
  predictor.weights = json_vector(beta.at("beta"), "beta.json");
  predictor.intercept = beta.at("beta0").get<double>();
  predictor.task = parse_task(beta.at("task").get<std::string>());
  MsaModel model{load_stiefel(dir / "source_basis.csv"),
                 load_stiefel(dir / "target_basis.csv"),
                 std::move(predictor),
                 load_plan(dir / "plan.csv"),
                 load_plan(dir / "initial_plan.csv"),
                 {},
                 {},
                 read_loss_trace(dir / "loss_trace.csv"),
                 meta.at("best_iteration").get<int>(),
                 msa_from(read_json(dir / "config.json"))};
  const auto bands = meta.value("bands", std::size_t{0});
  for (std::size_t b = 0; b < bands; ++b) {
    model.source_means.emplace_back(read_matrix_csv(dir / ("source_mean_band" + std::to_string(b) + ".csv")));
    model.target_means.emplace_back(read_matrix_csv(dir / ("target_mean_band" + std::to_string(b) + ".csv")));
  }
  if (model.predictor.weights.size() != model.target_basis.rank()) {
    throw ValidationError("model: beta length differs from the basis rank");
  }
  return model;
}

void save_embedding(const EmbeddedPair& embedding, const fs::path& dir) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "source_embedding.csv", embedding.source);
  write_matrix_csv(dir / "target_embedding.csv", embedding.target);
  for (std::size_t b = 0; b < embedding.source_means.size(); ++b) {
    write_matrix_csv(dir / ("source_mean_band" + std::to_string(b) + ".csv"), embedding.source_means[b].matrix());
    write_matrix_csv(dir / ("target_mean_band" + std::to_string(b) + ".csv"), embedding.target_means[b].matrix());
  }
  json blocks = json::array();
  for (Index s : embedding.block_sizes) blocks.push_back(s);
  write_json(dir / "embedding.json",
             {{"mode", embedding.mode == EmbeddingMode::global_mean ? "global_mean" : "per_domain_mean"},
              {"block_sizes", blocks},
              {"vech_ordering", kVechOrdering}});
}

synth::MixingSpec parse_mixing_spec(const std::string& json_text) {
  const char* where = "mixing spec";
  const json j = parse_json(json_text, where);
  check_keys(j, {"p", "q", "n", "m", "source_mixing", "target_mixing", "target_shift",
                 "max_condition", "log_variance_low", "log_variance_high", "noise_scale",
                 "noise_jitter", "beta", "beta_scale", "label_noise", "task", "labeled_fraction",
                 "seed"},
             where);
  synth::MixingSpec s;
  get_if(j, "p", s.p, where);
  get_if(j, "q", s.q, where);
  get_if(j, "n", s.n, where);
  s.m = s.n;
  get_if(j, "m", s.m, where);
  if (j.contains("source_mixing")) s.source_mixing = json_matrix(j.at("source_mixing"), where);
  if (j.contains("target_mixing")) s.target_mixing = json_matrix(j.at("target_mixing"), where);
  get_if(j, "target_shift", s.target_shift, where);
  get_if(j, "max_condition", s.max_condition, where);
  get_if(j, "log_variance_low", s.log_variance_low, where);
  get_if(j, "log_variance_high", s.log_variance_high, where);
  get_if(j, "noise_scale", s.noise_scale, where);
  get_if(j, "noise_jitter", s.noise_jitter, where);
  if (j.contains("beta")) s.beta = json_vector(j.at("beta"), where);
  get_if(j, "beta_scale", s.beta_scale, where);
  get_if(j, "label_noise", s.label_noise, where);
  s.task = task_from(j, "task", s.task);
  get_if(j, "labeled_fraction", s.labeled_fraction, where);
  get_if(j, "seed", s.seed, where);
  s.validate();
  return s;
}

std::string to_json(const synth::MixingSpec& s) {
  json j{{"p", s.p},
         {"q", s.q},
         {"n", s.n},
         {"m", s.m},
         {"target_shift", s.target_shift},
         {"max_condition", s.max_condition},
         {"log_variance_low", s.log_variance_low},
         {"log_variance_high", s.log_variance_high},
         {"noise_scale", s.noise_scale},
         {"noise_jitter", s.noise_jitter},
         {"beta_scale", s.beta_scale},
         {"label_noise", s.label_noise},
         {"task", std::string(to_string(s.task))},
         {"labeled_fraction", s.labeled_fraction},
         {"seed", s.seed}};
  if (s.source_mixing.size() > 0) j["source_mixing"] = matrix_json(s.source_mixing);
  if (s.target_mixing.size() > 0) j["target_mixing"] = matrix_json(s.target_mixing);
  if (s.beta.size() > 0) j["beta"] = vector_json(s.beta);
  return j.dump(2);
}

MsaConfig parse_msa_config(const std::string& json_text) {
  return msa_from(parse_json(json_text, "msa config"));
}

std::string to_json(const MsaConfig& config) { return msa_json(config).dump(2); }

experiments::BenchmarkConfig parse_benchmark_config(const std::string& json_text) {
  const char* where = "benchmark config";
  const json j = parse_json(json_text, where);
  check_keys(j, {"methods", "grid", "msa", "fraction", "splits", "master_seed", "jobs",
                 "record_wall_time", "mean"},
             where);
  experiments::BenchmarkConfig c;
  get_if(j, "methods", c.methods, where);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"gamma", "rho", "epsilon", "ridge", "sigma2"}, "grid");
    get_if(g, "gamma", c.grid.gamma, where);
    get_if(g, "rho", c.grid.rho, where);
    get_if(g, "epsilon", c.grid.epsilon, where);
    get_if(g, "ridge", c.grid.ridge, where);
    get_if(g, "sigma2", c.grid.sigma2, where);
  }
  if (j.contains("msa")) c.msa = msa_from(j.at("msa"));
  get_if(j, "fraction", c.fraction, where);
  get_if(j, "splits", c.splits, where);
  get_if(j, "master_seed", c.master_seed, where);
  get_if(j, "jobs", c.jobs, where);
  get_if(j, "record_wall_time", c.record_wall_time, where);
  if (j.contains("mean")) {
    const json& m = j.at("mean");
    check_keys(m, {"tolerance", "max_iter"}, "mean");
    get_if(m, "tolerance", c.mean.tolerance, where);
    get_if(m, "max_iter", c.mean.max_iter, where);
  }
  c.validate();
  return c;
}

std::string to_json(const experiments::BenchmarkConfig& c) {
  const json j{{"methods", c.methods},
               {"grid",
                {{"gamma", c.grid.gamma},
                 {"rho", c.grid.rho},
                 {"epsilon", c.grid.epsilon},
                 {"ridge", c.grid.ridge},
                 {"sigma2", c.grid.sigma2}}},
               {"msa", msa_json(c.msa)},
               {"fraction", c.fraction},
               {"splits", c.splits},
               {"master_seed", c.master_seed},
               {"jobs", c.jobs},
               {"record_wall_time", c.record_wall_time},
               {"mean", {{"tolerance", c.mean.tolerance}, {"max_iter", c.mean.max_iter}}}};
  return j.dump(2);
}

std::string content_hash(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("content_hash: not a directory: " + dir.string());
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files.emplace_back(fs::relative(entry.path(), dir).generic_string(), entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& [rel, path] : files) {
    const std::string content = read_text(path);
    std::string blob = "blob " + std::to_string(content.size());
    blob.push_back('\0');
    blob += content;
    listing += sha1_hex(blob) + "  " + rel + "\n";
  }
  return sha1_hex(listing);
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::string& config_json, const fs::path& dataset_dir) {
  json j{{"command", command},
         {"tool", "msa"},
         {"tool_version", kToolVersion},
         {"config", config_json.empty() ? json::object() : parse_json(config_json, "config")}};
  if (!dataset_dir.empty()) {
    j["dataset"] = dataset_dir.generic_string();
    j["dataset_hash"] = content_hash(dataset_dir);
  }
  write_json(out_dir / "manifest.json", j);
}

void write_results(const fs::path& path, const std::vector<experiments::ResultRow>& rows) {
  std::ostringstream os;
  experiments::write_results_csv(os, rows);
  write_text(path, os.str());
}

std::vector<experiments::ResultRow> read_results(const fs::path& path) {
  std::istringstream in(read_text(path));
  return experiments::read_results_csv(in);
}

}  // namespace msa::io
