#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdgan/error.hpp"
#include "mdgan/experiment/config.hpp"
#include "mdgan/experiment/report.hpp"
#include "mdgan/experiment/runner.hpp"

using namespace mdgan;
using namespace mdgan::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mdgan_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmallConfig = R"(
# tiny synthetic experiment
dataset:
  name: blobs
  synthetic: {kind: blob, n_normal: 120, n_anomaly: 20, dim: 4, separation: 4.0, seed: 3}
  train_size: 80
train:
  epochs: 2
  batch_size: 16
  warm_up: [0, 3]
run:
  seeds: [1, 2, 3]
  parallelism: 1
)";

std::vector<eval::MetricsRecord> synthetic_records(std::size_t seeds) {
  std::vector<eval::MetricsRecord> out;
  for (std::uint64_t s = 1; s <= seeds; ++s) {
    const double jitter = 0.01 * static_cast<double>(s % 3);
    out.push_back({"alpha", "baseline", s, 0.80 + jitter, 0.40, 0.20});
    out.push_back({"alpha", "mdgan_w0", s, 0.84 + jitter, 0.40 + jitter, 0.20});
    out.push_back({"alpha", "mdgan_w1", s, 0.80 + jitter, 0.40, 0.19});
  }
  return out;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config parsing") {
  const auto cfg = parse_config(kSmallConfig, "/tmp");
  REQUIRE(cfg.datasets.size() == 1);
  CHECK(cfg.datasets[0].name == "blobs");
  REQUIRE(cfg.datasets[0].synthetic);
  CHECK(cfg.datasets[0].synthetic->n_normal == 120);
  CHECK(cfg.datasets[0].partition.train_size == 80u);
  CHECK(cfg.train.epochs == 2);
  CHECK(cfg.warm_ups == std::vector<std::size_t>{0, 3});
  CHECK(cfg.run.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.run.output_dir == fs::path("/tmp/mdgan-out"));

  const auto defaults = parse_config("dataset: {synthetic: {kind: ring}}\nrun: {seed_count: 4}\n");
  CHECK(defaults.warm_ups == std::vector<std::size_t>{0, 1, 3, 6});
  CHECK(defaults.run.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
  CHECK(defaults.train.epochs == 30);
  CHECK(defaults.train.batch_size == 64);

  CHECK_THROWS_AS(parse_config("dataset: {synthetic: {}}\nrun: {seeds: [1, 1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dataset: {synthetic: {}}\ntrain: {warm_up: []}\nrun: {seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dataset: {synthetic: {}}\ntrain: {epochz: 3}\nrun: {seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dataset: {path: x.csv}\nrun: {seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run: {seeds: [1]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("dataset: [unbalanced\n"), ParseError);

  // the resolved JSON form parses back to the same config
  const auto round = parse_config(config_to_json(cfg));
  CHECK(config_to_json(round) == config_to_json(cfg));
}

TEST_CASE("report formatting") {
  CHECK(config_id(std::nullopt) == "baseline");
  CHECK(config_id(3) == "mdgan_w3");
  CHECK(warm_up_title(0) == "No Warm Up");
  CHECK(warm_up_title(1) == "One Epoch Warm Up");
  CHECK(warm_up_title(3) == "Three Epochs Warm Up");
  CHECK(warm_up_title(6) == "Six Epochs Warm Up");
  CHECK(format_cell({5.5312, true, 3.0, 30}) == "5.53*");
  CHECK(format_cell({-0.004, false, -0.1, 30}) == "0.00");
  CHECK(format_cell({-1.236, false, -0.1, 30}) == "-1.24");
  CHECK(format_cell({std::nullopt, false, 0.0, 1}) == "n/a");
  CHECK_THROWS_AS(build_aggregate({}, std::vector<std::size_t>{0}), ConfigError);

  const auto records = synthetic_records(6);
  const std::vector<std::size_t> warm_ups{0, 1};
  const auto report = build_aggregate(records, warm_ups);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].metric == eval::Metric::auc_roc);
  REQUIRE(report.rows[0].cells.size() == 2);
  CHECK(report.rows[0].cells[0].significant);
  CHECK(report.rows[0].cells[0].pairs == 6);

  const std::string csv = render(report, ReportFormat::csv);
  const std::string md = render(report, ReportFormat::markdown);
  CHECK(csv.rfind("dataset,metric,better,warm_up_0,warm_up_1\n", 0) == 0);
  CHECK(md.find("| Dataset | No Warm Up | One Epoch Warm Up |") != std::string::npos);
  // markdown and csv carry the same numbers
  for (const auto& row : report.rows) {
    for (const auto& cell : row.cells) {
      const std::string text = format_cell(cell);
      CHECK(csv.find(text) != std::string::npos);
      std::string with_pct = text;
      with_pct.insert(with_pct.find_last_not_of('*') + 1, "%");
      CHECK(md.find(with_pct) != std::string::npos);
    }
  }
  CHECK(render(report, ReportFormat::json).find("\"warm_ups\"") != std::string::npos);

  const auto parsed = parse_metrics_csv(metrics_csv(records));
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].auc_roc == records[i].auc_roc);
    CHECK(parsed[i].config == records[i].config);
  }
  CHECK_THROWS_AS(parse_metrics_csv("bad,header\n"), ParseError);
}

TEST_CASE("run_experiment: counts, outputs, determinism, replay") {
  auto cfg = parse_config(kSmallConfig);
  const auto dir_a = scratch("a");
  const auto dir_b = scratch("b");
  cfg.run.output_dir = dir_a;
  const auto manifest = run_experiment(cfg);
  CHECK(manifest.runs.size() == 3 * (1 + 2));
  CHECK(manifest.all_ok());

  const auto records = parse_metrics_csv(slurp(dir_a / "metrics.csv"));
  CHECK(records.size() == 9);
  CHECK(fs::exists(dir_a / "aggregate.md"));
  CHECK(fs::exists(dir_a / "aggregate.csv"));
  CHECK(fs::exists(dir_a / "metrics.json"));
  CHECK(fs::exists(dir_a / "traces" / "blobs" / "mdgan_w3_seed2.csv"));
  CHECK(slurp(dir_a / "manifest.json").find("\"state\": \"complete\"") != std::string::npos);

  cfg.run.output_dir = dir_b;
  cfg.run.parallelism = 3;
  run_experiment(cfg);
  for (const char* f : {"metrics.csv", "aggregate.csv", "aggregate.md", "aggregate.json"}) {
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));
  }

  const auto replay = load_manifest_config(dir_a / "manifest.json");
  CHECK(config_to_json(replay) == manifest.config_json);
  fs::remove(dir_a / "aggregate.md");
  CHECK(report_from_manifest(dir_a / "manifest.json") == 9);
  CHECK(slurp(dir_a / "aggregate.md") == slurp(dir_b / "aggregate.md"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("run_experiment: diverging runs are recorded and the rest continue") {
  auto cfg = parse_config(kSmallConfig);
  cfg.run.output_dir = scratch("diverge");
  cfg.train.g_optimizer = nn::AdamSettings{1e300};
  const auto manifest = run_experiment(cfg);
  CHECK(manifest.count(RunStatus::ok) == 3);  // baselines never touch G
  CHECK(manifest.count(RunStatus::diverged) == 6);
  CHECK_FALSE(manifest.all_ok());
  CHECK(slurp(cfg.run.output_dir / "manifest.json").find("\"diverged\"") != std::string::npos);
  fs::remove_all(cfg.run.output_dir);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

}  // TEST_SUITE
