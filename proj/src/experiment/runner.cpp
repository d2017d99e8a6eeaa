#include "mdgan/experiment/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mdgan/data.hpp"
#include "mdgan/error.hpp"
#include "mdgan/experiment/report.hpp"
#include "mdgan/nn/serialize.hpp"
#include "mdgan/rng.hpp"

namespace mdgan::experiment {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kManifestFormat = "mdgan-manifest";
constexpr int kManifestVersion = 1;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << content;
}

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Job {
  std::size_t dataset;
  std::size_t seed;
  std::optional<std::size_t> warm_up;
};

fs::path trace_path(const RunOutcome& r) {
  return fs::path("traces") / r.dataset / (r.config + "_seed" + std::to_string(r.seed) + ".csv");
}

fs::path model_path(const RunOutcome& r) {
  return fs::path("models") / r.dataset / (r.config + "_seed" + std::to_string(r.seed) + ".json");
}

data::RawDataset load_dataset(const DatasetConfig& ds) {
  auto raw = ds.path ? data::load_csv(*ds.path, ds.schema) : data::make_synthetic(*ds.synthetic);
  return data::drop_wide_categoricals(raw, ds.max_categorical_values);
}

ArtifactHash input_hash(const DatasetConfig& ds) {
  if (ds.path) return {fs::absolute(*ds.path).string(), fnv1a_hex(read_file(*ds.path))};
  const auto& s = *ds.synthetic;
  const std::string description = "synthetic:" + data::to_string(s.kind) + ":" + std::to_string(s.n_normal) + ":" +
                                  std::to_string(s.n_anomaly) + ":" + std::to_string(s.dim) + ":" +
                                  std::to_string(s.separation) + ":" + std::to_string(s.seed);
  return {description, fnv1a_hex(description)};
}

json run_to_json(const RunOutcome& r) {
  json j{{"dataset", r.dataset},
         {"config", r.config},
         {"seed", r.seed},
         {"warm_up", r.warm_up ? json(*r.warm_up) : json(nullptr)},
         {"status", to_string(r.status)},
         {"seconds", r.seconds}};
  if (!r.message.empty()) j["message"] = r.message;
  if (r.status == RunStatus::ok) {
    j["checkpoint_epoch"] = r.checkpoint.epoch;
    j["validation_score"] = r.checkpoint.validation_score;
  }
  return j;
}

json hashes_to_json(const std::vector<ArtifactHash>& hashes) {
  json arr = json::array();
  for (const auto& h : hashes) arr.push_back({{"path", h.path}, {"fnv1a", h.fnv1a}});
  return arr;
}

void write_manifest(const RunManifest& m, bool complete) {
  json runs = json::array();
  for (const auto& r : m.runs) runs.push_back(run_to_json(r));
  json doc{{"format", kManifestFormat},
           {"version", kManifestVersion},
           {"state", complete ? "complete" : "running"},
           {"config", json::parse(m.config_json)},
           {"inputs", hashes_to_json(m.inputs)},
           {"runs", std::move(runs)}};
  if (complete) {
    doc["outputs"] = hashes_to_json(m.outputs);
    doc["summary"] = {{"ok", m.count(RunStatus::ok)},
                      {"diverged", m.count(RunStatus::diverged)},
                      {"failed", m.count(RunStatus::failed)},
                      {"seconds", m.seconds}};
  }
  write_file(m.output_dir / "manifest.json", doc.dump(2) + "\n");
}

RunOutcome execute(const Job& job, const ExperimentConfig& config, const data::DatasetSplit& split,
                   const fs::path& out_dir) {
  const auto& ds = config.datasets[job.dataset];
  RunOutcome r;
  r.dataset = ds.name;
  r.seed = config.run.seeds[job.seed];
  r.warm_up = job.warm_up;
  r.config = config_id(job.warm_up);
  const auto start = Clock::now();
  try {
    training::TrainConfig tc = config.train;
    tc.seed = derive_seed(r.seed, "run:" + ds.name);
    tc.warm_up = job.warm_up.value_or(0);
    auto result = job.warm_up ? training::train_mdgan(split, tc) : training::train_baseline(split, tc);
    r.trace = std::move(result.trace);
    r.checkpoint = result.checkpoint;

    const eval::ScoredTestSet scored{eval::rmse_scores(result.best_model, split.test), split.test_labels};
    if (!std::all_of(scored.scores.begin(), scored.scores.end(), [](double s) { return std::isfinite(s); })) {
      throw DivergenceError("scoring", r.checkpoint.epoch, NAN);
    }
    auto metrics = eval::compute_metrics(scored);
    metrics.dataset = r.dataset;
    metrics.config = r.config;
    metrics.seed = r.seed;
    r.metrics = metrics;

    write_file(out_dir / trace_path(r), training::trace_to_csv(r.trace));
    if (config.run.save_models) nn::save_parameters_file(result.best_model, out_dir / model_path(r));
    r.status = RunStatus::ok;
  } catch (const DivergenceError& e) {
    r.status = RunStatus::diverged;
    r.message = e.what();
  } catch (const std::exception& e) {
    r.status = RunStatus::failed;
    r.message = e.what();
  }
  r.seconds = elapsed(start);
  return r;
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::pending: return "pending";
    case RunStatus::ok: return "ok";
    case RunStatus::diverged: return "diverged";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

RunStatus parse_run_status(std::string_view name) {
  for (auto s : {RunStatus::pending, RunStatus::ok, RunStatus::diverged, RunStatus::failed}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown run status '" + std::string(name) + "'");
}

bool RunManifest::all_ok() const { return count(RunStatus::ok) == runs.size(); }

std::size_t RunManifest::count(RunStatus status) const {
  return static_cast<std::size_t>(
      std::count_if(runs.begin(), runs.end(), [status](const RunOutcome& r) { return r.status == status; }));
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunManifest run_experiment(const ExperimentConfig& config, const ProgressCallback& progress) {
  config.validate();
  const auto start = Clock::now();

  RunManifest manifest;
  manifest.output_dir = config.run.output_dir;
  manifest.config_json = config_to_json(config);
  fs::create_directories(manifest.output_dir);

  // Splits depend on (seed, dataset) only; built up front and shared read-only.
  std::vector<std::vector<data::DatasetSplit>> splits;
  for (const auto& ds : config.datasets) {
    manifest.inputs.push_back(input_hash(ds));
    const auto raw = load_dataset(ds);
    auto& per_seed = splits.emplace_back();
    for (auto seed : config.run.seeds) {
      per_seed.push_back(
          data::fit_and_apply_normalization(data::partition(raw, ds.partition, derive_seed(seed, "partition:" + ds.name))));
    }
  }

  std::vector<Job> jobs;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    for (std::size_t s = 0; s < config.run.seeds.size(); ++s) {
      jobs.push_back({d, s, std::nullopt});
      for (auto w : config.warm_ups) jobs.push_back({d, s, w});
    }
  }
  for (const auto& job : jobs) {
    RunOutcome r;
    r.dataset = config.datasets[job.dataset].name;
    r.seed = config.run.seeds[job.seed];
    r.warm_up = job.warm_up;
    r.config = config_id(job.warm_up);
    manifest.runs.push_back(std::move(r));
  }
  write_manifest(manifest, false);

  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::size_t done = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const auto& job = jobs[i];
      manifest.runs[i] = execute(job, config, splits[job.dataset][job.seed], manifest.output_dir);
      std::lock_guard lock(progress_mutex);
      ++done;
      if (progress) progress(manifest.runs[i], done, jobs.size());
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min(config.run.parallelism, jobs.size());
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
  }

  std::vector<eval::MetricsRecord> records;
  for (const auto& r : manifest.runs) {
    if (r.metrics) records.push_back(*r.metrics);
  }
  const auto& out = manifest.output_dir;
  write_file(out / "metrics.csv", metrics_csv(records));
  write_file(out / "metrics.json", metrics_json(records));
  std::vector<fs::path> produced{"metrics.csv", "metrics.json"};
  if (!records.empty()) {
    emit_report(records, config.warm_ups, out);
    produced.insert(produced.end(), {"aggregate.csv", "aggregate.md", "aggregate.json"});
  }
  for (const auto& r : manifest.runs) {
    if (r.status != RunStatus::ok) continue;
    produced.push_back(trace_path(r));
    if (config.run.save_models) produced.push_back(model_path(r));
  }
  for (const auto& p : produced) manifest.outputs.push_back({p.generic_string(), fnv1a_hex(read_file(out / p))});

  manifest.seconds = elapsed(start);
  write_manifest(manifest, true);
  return manifest;
}

ExperimentConfig load_manifest_config(const fs::path& manifest_path) {
  json doc;
  try {
    doc = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), 0);
  }
  if (!doc.is_object() || doc.value("format", "") != kManifestFormat || !doc.contains("config")) {
    throw ConfigError(manifest_path.string() + " is not an experiment manifest");
  }
  return parse_config(doc["config"].dump(), manifest_path.parent_path());
}

std::size_t report_from_manifest(const fs::path& manifest_path) {
  const auto config = load_manifest_config(manifest_path);
  const auto dir = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();
  const auto records = parse_metrics_csv(read_file(dir / "metrics.csv"));
  emit_report(records, config.warm_ups, dir);
  return records.size();
}

}  // namespace mdgan::experiment
