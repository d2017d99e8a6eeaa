#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdgan/data.hpp"
#include "mdgan/training.hpp"

namespace mdgan::experiment {

struct DatasetConfig {
  std::string name;
  /// CSV source; resolved against the config file's directory.
  std::optional<std::filesystem::path> path;
  data::CsvSchema schema;
  /// Generated source (mutually exclusive with `path`).
  std::optional<data::SyntheticSpec> synthetic;
  data::PartitionPlan partition;
  std::size_t max_categorical_values = 3;
};

struct RunSettings {
  std::vector<std::uint64_t> seeds;
  std::size_t parallelism = 1;
  std::filesystem::path output_dir = "mdgan-out";
  bool save_models = false;
};

/// Experiment file contents. `train.seed` and `train.warm_up` are filled per run.
struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  training::TrainConfig train;
  std::vector<std::size_t> warm_ups{0, 1, 3, 6};
  RunSettings run;

  /// Throws ConfigError: no datasets, empty warm-up list, duplicate seeds or
  /// dataset names, or an invalid training block.
  void validate() const;
};

/// Parses the YAML experiment format (see docs/config.md). JSON documents are
/// accepted too, which is how manifests replay their resolved config.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved config as a JSON document in the same grammar parse_config reads.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace mdgan::experiment
