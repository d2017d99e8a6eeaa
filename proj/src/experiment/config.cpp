#include "mdgan/experiment/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "mdgan/error.hpp"

namespace mdgan::experiment {
namespace {

using nlohmann::json;

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!node.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in '" + where + "'");
    }
  }
}

template <class T>
T get(const YAML::Node& node, const char* key, const std::string& where) {
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + where + "." + key + "' has an invalid value");
  }
}

template <class T>
void read_if(const YAML::Node& node, const char* key, const std::string& where, T& target) {
  if (node[key]) target = get<T>(node, key, where);
}

template <class T>
void read_if(const YAML::Node& node, const char* key, const std::string& where, std::optional<T>& target) {
  if (node[key] && !node[key].IsNull()) target = get<T>(node, key, where);
}

DatasetConfig parse_dataset(const YAML::Node& node, const std::filesystem::path& base_dir, std::size_t index) {
  const std::string where = "datasets[" + std::to_string(index) + "]";
  check_keys(node,
             {"name", "path", "synthetic", "label_column", "positive_label", "partition_column",
              "categorical_columns", "ignore_columns", "train_size", "validation_fraction",
              "max_categorical_values"},
             where);
  DatasetConfig ds;
  ds.name = node["name"] ? get<std::string>(node, "name", where) : "dataset" + std::to_string(index);

  if (node["path"] && node["synthetic"]) throw ConfigError(where + ": give either 'path' or 'synthetic', not both");
  if (node["path"]) {
    std::filesystem::path p = get<std::string>(node, "path", where);
    ds.path = p.is_absolute() ? p : std::filesystem::weakly_canonical(base_dir / p);
    if (!node["label_column"]) throw ConfigError(where + ": CSV datasets need 'label_column'");
  } else if (node["synthetic"]) {
    const auto s = node["synthetic"];
    check_keys(s, {"kind", "n_normal", "n_anomaly", "dim", "separation", "seed"}, where + ".synthetic");
    data::SyntheticSpec spec;
    if (s["kind"]) spec.kind = data::parse_synthetic_kind(get<std::string>(s, "kind", where));
    read_if(s, "n_normal", where, spec.n_normal);
    read_if(s, "n_anomaly", where, spec.n_anomaly);
    read_if(s, "dim", where, spec.dim);
    read_if(s, "separation", where, spec.separation);
    read_if(s, "seed", where, spec.seed);
    ds.synthetic = spec;
  } else {
    throw ConfigError(where + ": needs 'path' or 'synthetic'");
  }

  ds.schema.label_column = node["label_column"] ? get<std::string>(node, "label_column", where) : "label";
  read_if(node, "positive_label", where, ds.schema.positive_label);
  read_if(node, "partition_column", where, ds.schema.partition_column);
  read_if(node, "categorical_columns", where, ds.schema.categorical_columns);
  read_if(node, "ignore_columns", where, ds.schema.ignore_columns);
  ds.partition.use_predefined = ds.schema.partition_column.has_value();
  read_if(node, "train_size", where, ds.partition.train_size);
  read_if(node, "validation_fraction", where, ds.partition.validation_fraction);
  read_if(node, "max_categorical_values", where, ds.max_categorical_values);
  return ds;
}

void parse_model(const YAML::Node& node, training::ModelOverrides& m) {
  check_keys(node, {"latent_dim", "g_hidden", "d1_hidden", "g_batch_norm", "g_dropout", "d1_dropout"}, "model");
  read_if(node, "latent_dim", "model", m.latent_dim);
  read_if(node, "g_hidden", "model", m.g_hidden);
  read_if(node, "d1_hidden", "model", m.d1_hidden);
  read_if(node, "g_batch_norm", "model", m.g_batch_norm);
  read_if(node, "g_dropout", "model", m.g_dropout);
  read_if(node, "d1_dropout", "model", m.d1_dropout);
}

void parse_train(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node,
             {"epochs", "batch_size", "warm_up", "warm_up_unit", "g_loss_mode", "g_learning_rate",
              "d1_learning_rate", "d2_learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon"},
             "train");
  auto& t = cfg.train;
  read_if(node, "epochs", "train", t.epochs);
  read_if(node, "batch_size", "train", t.batch_size);
  if (node["warm_up"]) {
    cfg.warm_ups = node["warm_up"].IsSequence() ? get<std::vector<std::size_t>>(node, "warm_up", "train")
                                                : std::vector<std::size_t>{get<std::size_t>(node, "warm_up", "train")};
  }
  if (node["warm_up_unit"]) t.warm_up_unit = training::parse_warm_up_unit(get<std::string>(node, "warm_up_unit", "train"));
  if (node["g_loss_mode"]) t.g_loss_mode = training::parse_g_loss_mode(get<std::string>(node, "g_loss_mode", "train"));

  nn::AdamSettings adam;
  read_if(node, "adam_beta1", "train", adam.beta1);
  read_if(node, "adam_beta2", "train", adam.beta2);
  read_if(node, "adam_epsilon", "train", adam.epsilon);
  nn::AdamSettings g = adam;
  nn::AdamSettings d2 = adam;
  nn::SgdSettings d1;
  read_if(node, "g_learning_rate", "train", g.learning_rate);
  read_if(node, "d1_learning_rate", "train", d1.learning_rate);
  read_if(node, "d2_learning_rate", "train", d2.learning_rate);
  t.g_optimizer = g;
  t.d1_optimizer = d1;
  t.d2_optimizer = d2;
}

void parse_run(const YAML::Node& node, RunSettings& run) {
  check_keys(node, {"seeds", "seed_count", "parallelism", "output_dir", "save_models"}, "run");
  if (node["seeds"] && node["seed_count"]) throw ConfigError("run: give either 'seeds' or 'seed_count'");
  if (node["seeds"]) run.seeds = get<std::vector<std::uint64_t>>(node, "seeds", "run");
  if (node["seed_count"]) {
    const auto n = get<std::size_t>(node, "seed_count", "run");
    run.seeds.clear();
    for (std::size_t i = 1; i <= n; ++i) run.seeds.push_back(i);
  }
  read_if(node, "parallelism", "run", run.parallelism);
  if (node["output_dir"]) run.output_dir = get<std::string>(node, "output_dir", "run");
  read_if(node, "save_models", "run", run.save_models);
}

json optimizer_lr(const nn::OptimizerSettings& s) {
  return std::visit([](const auto& v) { return json(v.learning_rate); }, s);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw ConfigError("config defines no datasets");
  if (warm_ups.empty()) throw ConfigError("warm-up list must not be empty");
  if (std::set<std::size_t>(warm_ups.begin(), warm_ups.end()).size() != warm_ups.size()) {
    throw ConfigError("warm-up values must be distinct");
  }
  if (run.seeds.empty()) throw ConfigError("run block needs at least one seed");
  if (std::set<std::uint64_t>(run.seeds.begin(), run.seeds.end()).size() != run.seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (run.parallelism == 0) throw ConfigError("parallelism must be >= 1");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name '" + d.name + "'");
    if (d.name.empty() || d.name.find_first_of("/\\,\"") != std::string::npos) {
      throw ConfigError("dataset name '" + d.name + "' must be nonempty and free of / \\ , \"");
    }
  }
  train.validate();
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1));
  }
  if (!root.IsMap()) throw ConfigError("experiment config must be a mapping");
  check_keys(root, {"dataset", "datasets", "model", "train", "run"}, "config");

  ExperimentConfig cfg;
  if (root["dataset"] && root["datasets"]) throw ConfigError("give either 'dataset' or 'datasets'");
  if (root["dataset"]) {
    cfg.datasets.push_back(parse_dataset(root["dataset"], base_dir, 0));
  } else if (root["datasets"]) {
    if (!root["datasets"].IsSequence()) throw ConfigError("'datasets' must be a list");
    std::size_t i = 0;
    for (const auto& node : root["datasets"]) cfg.datasets.push_back(parse_dataset(node, base_dir, i++));
  }
  if (root["model"]) parse_model(root["model"], cfg.train.model);
  if (root["train"]) parse_train(root["train"], cfg);
  if (root["run"]) parse_run(root["run"], cfg.run);
  if (cfg.run.output_dir.is_relative()) cfg.run.output_dir = (base_dir / cfg.run.output_dir).lexically_normal();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json datasets = json::array();
  for (const auto& d : cfg.datasets) {
    json j{{"name", d.name},
           {"label_column", d.schema.label_column},
           {"validation_fraction", d.partition.validation_fraction},
           {"max_categorical_values", d.max_categorical_values},
           {"categorical_columns", d.schema.categorical_columns},
           {"ignore_columns", d.schema.ignore_columns}};
    if (d.path) j["path"] = std::filesystem::absolute(*d.path).string();
    if (d.synthetic) {
      const auto& s = *d.synthetic;
      j["synthetic"] = {{"kind", data::to_string(s.kind)}, {"n_normal", s.n_normal}, {"n_anomaly", s.n_anomaly},
                        {"dim", s.dim},  {"separation", s.separation}, {"seed", s.seed}};
    }
    if (d.schema.positive_label) j["positive_label"] = *d.schema.positive_label;
    if (d.schema.partition_column) j["partition_column"] = *d.schema.partition_column;
    if (d.partition.train_size) j["train_size"] = *d.partition.train_size;
    datasets.push_back(std::move(j));
  }

  const auto& m = cfg.train.model;
  json model{{"g_batch_norm", m.g_batch_norm}, {"g_dropout", m.g_dropout}, {"d1_dropout", m.d1_dropout}};
  if (m.latent_dim) model["latent_dim"] = *m.latent_dim;
  if (m.g_hidden) model["g_hidden"] = *m.g_hidden;
  if (m.d1_hidden) model["d1_hidden"] = *m.d1_hidden;

  const auto& t = cfg.train;
  const auto& adam = std::get<nn::AdamSettings>(t.d2_optimizer);
  json train{{"epochs", t.epochs},
             {"batch_size", t.batch_size},
             {"warm_up", cfg.warm_ups},
             {"warm_up_unit", training::to_string(t.warm_up_unit)},
             {"g_loss_mode", training::to_string(t.g_loss_mode)},
             {"g_learning_rate", optimizer_lr(t.g_optimizer)},
             {"d1_learning_rate", optimizer_lr(t.d1_optimizer)},
             {"d2_learning_rate", optimizer_lr(t.d2_optimizer)},
             {"adam_beta1", adam.beta1},
             {"adam_beta2", adam.beta2},
             {"adam_epsilon", adam.epsilon}};

  json run{{"seeds", cfg.run.seeds},
           {"parallelism", cfg.run.parallelism},
           {"output_dir", std::filesystem::absolute(cfg.run.output_dir).string()},
           {"save_models", cfg.run.save_models}};

  return json{{"datasets", datasets}, {"model", model}, {"train", train}, {"run", run}}.dump(2);
}

}  // namespace mdgan::experiment
