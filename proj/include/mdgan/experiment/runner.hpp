#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdgan/eval.hpp"
#include "mdgan/experiment/config.hpp"
#include "mdgan/training.hpp"

namespace mdgan::experiment {

enum class RunStatus { pending, ok, diverged, failed };

std::string to_string(RunStatus status);
RunStatus parse_run_status(std::string_view name);

struct RunOutcome {
  std::string dataset;
  std::string config;  // config_id(warm_up)
  std::uint64_t seed = 0;
  std::optional<std::size_t> warm_up;  // unset for the baseline
  RunStatus status = RunStatus::pending;
  std::string message;
  std::optional<eval::MetricsRecord> metrics;
  training::LossTrace trace;
  training::Checkpoint checkpoint;
  double seconds = 0.0;
};

struct ArtifactHash {
  std::string path;  // relative to the output directory, or absolute for inputs
  std::string fnv1a;
};

struct RunManifest {
  std::filesystem::path output_dir;
  std::string config_json;
  std::vector<ArtifactHash> inputs;
  std::vector<ArtifactHash> outputs;
  std::vector<RunOutcome> runs;
  double seconds = 0.0;

  bool all_ok() const;
  std::size_t count(RunStatus status) const;
};

/// 64-bit FNV-1a of `bytes` as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Called from worker threads (serialized) after every finished run.
using ProgressCallback = std::function<void(const RunOutcome& run, std::size_t done, std::size_t total)>;

/// Trains one baseline per (dataset, seed) and one MDGAN model per
/// (dataset, seed, warm-up) on a bounded worker pool, then writes into
/// `config.run.output_dir`:
///   manifest.json, metrics.csv, metrics.json, aggregate.{csv,md,json},
///   traces/<dataset>/<config>_seed<seed>.csv, and models/ when requested.
/// A diverged or failed run is recorded and the remaining runs continue.
/// Dataset loading and partitioning errors propagate.
RunManifest run_experiment(const ExperimentConfig& config, const ProgressCallback& progress = {});

/// Resolved config stored in a manifest written by run_experiment.
ExperimentConfig load_manifest_config(const std::filesystem::path& manifest_path);

/// Rebuilds aggregate.{csv,md,json} next to the manifest from its metrics.csv.
/// Returns the number of metric records read.
std::size_t report_from_manifest(const std::filesystem::path& manifest_path);

}  // namespace mdgan::experiment
