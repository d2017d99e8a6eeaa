#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdgan/eval.hpp"

namespace mdgan::experiment {

/// Config id of a run: "baseline" or "mdgan_w<warm-up>".
std::string config_id(std::optional<std::size_t> warm_up);

/// Metrics CSV, header "dataset,config,seed,auc_roc,auc_pr,eer".
/// Values use the shortest round-trip decimal form.
std::string metrics_csv(std::span<const eval::MetricsRecord> records);
std::string metrics_json(std::span<const eval::MetricsRecord> records);
std::vector<eval::MetricsRecord> parse_metrics_csv(std::string_view text);

struct AggregateCell {
  std::optional<double> improvement_pct;  // unset: fewer than two paired seeds or zero baseline mean
  bool significant = false;
  double t_statistic = 0.0;
  std::size_t pairs = 0;
};

struct AggregateRow {
  std::string dataset;
  eval::Metric metric;
  std::vector<AggregateCell> cells;  // one per warm-up value, in AggregateReport::warm_ups order
};

/// Percentage improvement of each MDGAN warm-up configuration over the
/// baseline of the same seeds, one row per (dataset, metric).
struct AggregateReport {
  std::vector<std::size_t> warm_ups;
  std::vector<AggregateRow> rows;
};

/// Throws ConfigError on empty `records`. Datasets appear in first-seen order.
AggregateReport build_aggregate(std::span<const eval::MetricsRecord> records, std::span<const std::size_t> warm_ups,
                                eval::Tails tails = eval::Tails::two);

enum class ReportFormat { csv, json, markdown };

ReportFormat parse_report_format(std::string_view name);

/// "No Warm Up", "One Epoch Warm Up", "Three Epochs Warm Up", ...
std::string warm_up_title(std::size_t warm_up);

/// "5.53*" style: two decimals, '*' when significant at 95%; "n/a" when undefined.
std::string format_cell(const AggregateCell& cell);

std::string render(const AggregateReport& report, ReportFormat format);

/// Builds the aggregate and writes aggregate.{csv,md,json} into `dir`.
AggregateReport emit_report(std::span<const eval::MetricsRecord> records, std::span<const std::size_t> warm_ups,
                            const std::filesystem::path& dir);

}  // namespace mdgan::experiment
