// mdgan: run anomaly-detection experiments, rebuild reports, generate
// synthetic datasets.
//
//   mdgan run experiment.yaml -j 4 -o results/
//   mdgan run results/manifest.json          (replay)
//   mdgan report results/manifest.json --format markdown
//   mdgan synth quick -o demo/ --run

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdgan/data.hpp"
#include "mdgan/error.hpp"
#include "mdgan/experiment/config.hpp"
#include "mdgan/experiment/report.hpp"
#include "mdgan/experiment/runner.hpp"

namespace fs = std::filesystem;
using namespace mdgan;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level g_level = Level::info;

void log(Level level, const std::string& text) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= g_level) std::cerr << "[" << names[static_cast<int>(level)] << "] " << text << '\n';
}

bool is_manifest(const fs::path& path) {
  if (path.extension() != ".json") return false;
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  return doc.is_object() && doc.value("format", "") == "mdgan-manifest";
}

struct RunOptions {
  std::string input;
  std::string out;
  std::size_t jobs = 0;
};

int run_command(const RunOptions& opt) {
  const fs::path input = opt.input;
  auto config = is_manifest(input) ? experiment::load_manifest_config(input) : experiment::load_config(input);
  if (!opt.out.empty()) config.run.output_dir = opt.out;
  if (opt.jobs > 0) config.run.parallelism = opt.jobs;

  const std::size_t per_seed = config.warm_ups.size() + 1;
  log(Level::info, "experiment: " + std::to_string(config.datasets.size()) + " dataset(s), " +
                       std::to_string(config.run.seeds.size()) + " seed(s), " + std::to_string(per_seed) +
                       " runs per seed, " + std::to_string(config.run.parallelism) + " worker(s)");
  log(Level::info, "writing to " + config.run.output_dir.string());

  const auto manifest =
      experiment::run_experiment(config, [](const experiment::RunOutcome& r, std::size_t done, std::size_t total) {
        std::ostringstream msg;
        msg << "[" << done << "/" << total << "] " << r.dataset << " " << r.config << " seed " << r.seed << ": "
            << experiment::to_string(r.status);
        if (r.metrics) msg << " auc_roc=" << r.metrics->auc_roc;
        msg << " (" << r.seconds << " s)";
        if (r.status == experiment::RunStatus::ok) {
          log(Level::info, msg.str());
        } else {
          log(Level::warn, msg.str() + ": " + r.message);
        }
      });

  std::cout << "runs: " << manifest.runs.size() << " ok: " << manifest.count(experiment::RunStatus::ok)
            << " diverged: " << manifest.count(experiment::RunStatus::diverged)
            << " failed: " << manifest.count(experiment::RunStatus::failed) << '\n';
  const auto aggregate = manifest.output_dir / "aggregate.md";
  if (fs::exists(aggregate)) {
    std::ifstream in(aggregate);
    std::cout << '\n' << in.rdbuf();
  }
  if (!manifest.all_ok()) {
    std::cout << "\naborted runs:\n";
    for (const auto& r : manifest.runs) {
      if (r.status != experiment::RunStatus::ok) {
        std::cout << "  " << r.dataset << " " << r.config << " seed " << r.seed << ": " << r.message << '\n';
      }
    }
    return 2;
  }
  return 0;
}

int report_command(const std::string& manifest_path, const std::string& format) {
  const fs::path path = manifest_path;
  const auto n = experiment::report_from_manifest(path);
  log(Level::info, "aggregated " + std::to_string(n) + " metric records");
  const auto fmt = experiment::parse_report_format(format);
  const char* file = fmt == experiment::ReportFormat::csv    ? "aggregate.csv"
                     : fmt == experiment::ReportFormat::json ? "aggregate.json"
                                                             : "aggregate.md";
  std::ifstream in(path.parent_path().empty() ? fs::path(file) : path.parent_path() / file);
  std::cout << in.rdbuf();
  return 0;
}

struct Preset {
  data::SyntheticSpec spec;
  std::size_t epochs;
  std::size_t seeds;
  std::string warm_ups;
  std::size_t train_size;
};

const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> table{
      {"quick", {{data::SyntheticKind::blob, 300, 60, 6, 4.0, 7}, 4, 3, "[0, 1]", 200}},
      {"blob", {{data::SyntheticKind::blob, 1000, 100, 8, 4.0, 7}, 30, 5, "[0, 1, 3, 6]", 900}},
      {"moons", {{data::SyntheticKind::two_moons_like, 1000, 100, 4, 1.5, 7}, 30, 5, "[0, 1, 3, 6]", 900}},
      {"ring", {{data::SyntheticKind::ring, 1000, 100, 4, 1.0, 7}, 30, 5, "[0, 1, 3, 6]", 900}},
  };
  return table;
}

int synth_command(const std::string& name, const std::string& out, bool run, std::size_t jobs) {
  const auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& [k, _] : presets()) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  const auto& p = it->second;
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  const auto csv = dir / (name + ".csv");
  const auto yaml = dir / (name + ".yaml");
  data::write_csv(data::make_synthetic(p.spec), csv);

  std::ofstream cfg(yaml);
  cfg << "# generated by `mdgan synth " << name << "`\n"
      << "dataset:\n"
      << "  name: " << name << "\n"
      << "  path: " << csv.filename().string() << "\n"
      << "  label_column: label\n"
      << "  positive_label: \"1\"\n"
      << "  train_size: " << p.train_size << "\n"
      << "train:\n"
      << "  epochs: " << p.epochs << "\n"
      << "  batch_size: 64\n"
      << "  warm_up: " << p.warm_ups << "\n"
      << "run:\n"
      << "  seed_count: " << p.seeds << "\n"
      << "  parallelism: 1\n"
      << "  output_dir: " << name << "-results\n";
  cfg.close();
  std::cout << "wrote " << csv.string() << "\n" << "wrote " << yaml.string() << "\n";
  if (!run) return 0;
  return run_command({yaml.string(), "", jobs});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDGAN anomaly-detection experiments"};
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Train and evaluate every run of an experiment config or manifest");
  run->add_option("config", run_opt.input, "Experiment YAML file or a manifest.json to replay")->required();
  run->add_option("-o,--out", run_opt.out, "Output directory (overrides run.output_dir)");
  run->add_option("-j,--jobs", run_opt.jobs, "Worker threads (overrides run.parallelism)")
      ->check(CLI::PositiveNumber);

  std::string manifest;
  std::string format = "markdown";
  auto* report = app.add_subcommand("report", "Rebuild the aggregate report of a finished experiment");
  report->add_option("manifest", manifest, "manifest.json written by `run`")->required();
  report->add_option("--format", format, "Printed format: markdown, csv or json")
      ->check(CLI::IsMember({"markdown", "md", "csv", "json"}));

  std::string preset;
  std::string synth_out;
  bool synth_run = false;
  std::size_t synth_jobs = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and a matching experiment config");
  synth->add_option("preset", preset, "quick, blob, moons or ring")->required();
  synth->add_option("-o,--out", synth_out, "Directory for the CSV and YAML files");
  synth->add_flag("--run", synth_run, "Run the generated experiment right away");
  synth->add_option("-j,--jobs", synth_jobs, "Worker threads when --run is given");

  CLI11_PARSE(app, argc, argv);
  g_level = level == "error" ? Level::error : level == "warn" ? Level::warn : level == "debug" ? Level::debug : Level::info;

  try {
    if (*run) return run_command(run_opt);
    if (*report) return report_command(manifest, format);
    if (*synth) return synth_command(preset, synth_out, synth_run, synth_jobs);
  } catch (const ParseError& e) {
    log(Level::error, std::string("parse error: ") + e.what());
  } catch (const std::exception& e) {
    log(Level::error, e.what());
  }
  return 1;
}
