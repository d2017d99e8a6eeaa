#include "mdgan/experiment/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mdgan/error.hpp"

namespace mdgan::experiment {
namespace {

using eval::Metric;
using nlohmann::json;

constexpr Metric kMetrics[] = {Metric::auc_roc, Metric::auc_pr, Metric::eer};

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string metric_title(Metric m) {
  switch (m) {
    case Metric::auc_roc: return "AUC-ROC";
    case Metric::auc_pr: return "AUC-PR";
    case Metric::eer: return "EER";
  }
  return "?";
}

std::string number_word(std::size_t n) {
  static const char* words[] = {"Zero", "One", "Two",   "Three", "Four", "Five",
                                "Six",  "Seven", "Eight", "Nine",  "Ten"};
  return n < std::size(words) ? words[n] : std::to_string(n);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << content;
}

std::string render_csv(const AggregateReport& report) {
  std::string out = "dataset,metric,better";
  for (auto w : report.warm_ups) out += ",warm_up_" + std::to_string(w);
  out += '\n';
  for (const auto& row : report.rows) {
    out += row.dataset + ',' + eval::to_string(row.metric) + ',' +
           (eval::higher_is_better(row.metric) ? "higher" : "lower");
    for (const auto& cell : row.cells) out += ',' + format_cell(cell);
    out += '\n';
  }
  return out;
}

std::string render_markdown(const AggregateReport& report) {
  std::ostringstream out;
  bool first = true;
  for (Metric metric : kMetrics) {
    std::size_t max_pairs = 0;
    for (const auto& row : report.rows) {
      if (row.metric != metric) continue;
      for (const auto& c : row.cells) max_pairs = std::max(max_pairs, c.pairs);
    }
    if (!first) out << '\n';
    first = false;
    out << "## " << metric_title(metric) << "\n\n"
        << "Percentage of improvement in " << metric_title(metric) << " against the baseline ("
        << (eval::higher_is_better(metric) ? "higher" : "lower") << " is better), averaged over " << max_pairs
        << " seeds. \"*\" marks significance at 95% confidence (paired t-test).\n\n"
        << "| Dataset |";
    for (auto w : report.warm_ups) out << ' ' << warm_up_title(w) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < report.warm_ups.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& row : report.rows) {
      if (row.metric != metric) continue;
      out << "| " << row.dataset << " |";
      for (const auto& cell : row.cells) {
        std::string text = format_cell(cell);
        if (cell.improvement_pct) text.insert(text.find_last_not_of('*') + 1, "%");
        out << ' ' << text << " |";
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string render_json(const AggregateReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json cells = json::array();
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      const auto& c = row.cells[i];
      cells.push_back({{"warm_up", report.warm_ups[i]},
                       {"improvement_pct", c.improvement_pct ? json(*c.improvement_pct) : json(nullptr)},
                       {"display", format_cell(c)},
                       {"significant", c.significant},
                       {"t_statistic", std::isfinite(c.t_statistic) ? json(c.t_statistic) : json(nullptr)},
                       {"pairs", c.pairs}});
    }
    rows.push_back({{"dataset", row.dataset},
                    {"metric", eval::to_string(row.metric)},
                    {"better", eval::higher_is_better(row.metric) ? "higher" : "lower"},
                    {"cells", std::move(cells)}});
  }
  return json{{"warm_ups", report.warm_ups}, {"rows", std::move(rows)}}.dump(2) + "\n";
}

}  // namespace

std::string config_id(std::optional<std::size_t> warm_up) {
  return warm_up ? "mdgan_w" + std::to_string(*warm_up) : "baseline";
}

std::string metrics_csv(std::span<const eval::MetricsRecord> records) {
  std::string out = "dataset,config,seed,auc_roc,auc_pr,eer\n";
  for (const auto& r : records) {
    out += r.dataset + ',' + r.config + ',' + std::to_string(r.seed) + ',' + shortest(r.auc_roc) + ',' +
           shortest(r.auc_pr) + ',' + shortest(r.eer) + '\n';
  }
  return out;
}

std::string metrics_json(std::span<const eval::MetricsRecord> records) {
  json arr = json::array();
  for (const auto& r : records) {
    arr.push_back({{"dataset", r.dataset},
                   {"config", r.config},
                   {"seed", r.seed},
                   {"auc_roc", r.auc_roc},
                   {"auc_pr", r.auc_pr},
                   {"eer", r.eer}});
  }
  return arr.dump(2) + "\n";
}

std::vector<eval::MetricsRecord> parse_metrics_csv(std::string_view text) {
  std::vector<eval::MetricsRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "dataset,config,seed,auc_roc,auc_pr,eer") throw ParseError("unexpected metrics CSV header", 1);
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw ParseError("expected 6 fields", line_no);
    try {
      out.push_back({f[0], f[1], std::stoull(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])});
    } catch (const std::exception&) {
      throw ParseError("malformed metrics row", line_no);
    }
  }
  if (line_no == 0) throw ParseError("empty metrics CSV", 0);
  return out;
}

AggregateReport build_aggregate(std::span<const eval::MetricsRecord> records, std::span<const std::size_t> warm_ups,
                                eval::Tails tails) {
  if (records.empty()) throw ConfigError("no metric records to report");
  if (warm_ups.empty()) throw ConfigError("no warm-up configurations to report");

  std::vector<std::string> datasets;
  // dataset -> config -> seed -> record
  std::map<std::string, std::map<std::string, std::map<std::uint64_t, eval::MetricsRecord>>> index;
  for (const auto& r : records) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    index[r.dataset][r.config][r.seed] = r;
  }

  AggregateReport report{{warm_ups.begin(), warm_ups.end()}, {}};
  for (const auto& ds : datasets) {
    const auto& by_config = index[ds];
    std::vector<std::vector<eval::ImprovementRow>> per_warm_up;
    std::vector<std::size_t> pairs;
    for (auto w : warm_ups) {
      std::vector<eval::MetricsRecord> mdgan;
      std::vector<eval::MetricsRecord> baseline;
      const auto m_it = by_config.find(config_id(w));
      const auto b_it = by_config.find(config_id(std::nullopt));
      if (m_it != by_config.end() && b_it != by_config.end()) {
        for (const auto& [seed, rec] : m_it->second) {
          const auto b = b_it->second.find(seed);
          if (b == b_it->second.end()) continue;
          mdgan.push_back(rec);
          baseline.push_back(b->second);
        }
      }
      pairs.push_back(mdgan.size());
      per_warm_up.push_back(mdgan.size() >= 2 ? eval::aggregate_improvement(mdgan, baseline, tails)
                                              : std::vector<eval::ImprovementRow>{});
    }
    for (std::size_t mi = 0; mi < std::size(kMetrics); ++mi) {
      AggregateRow row{ds, kMetrics[mi], {}};
      for (std::size_t wi = 0; wi < warm_ups.size(); ++wi) {
        AggregateCell cell;
        cell.pairs = pairs[wi];
        if (!per_warm_up[wi].empty()) {
          const auto& imp = per_warm_up[wi][mi];
          cell.improvement_pct = imp.improvement_pct;
          cell.significant = imp.significance.significant_at_95;
          cell.t_statistic = imp.significance.t_statistic;
        }
        row.cells.push_back(cell);
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

std::string warm_up_title(std::size_t warm_up) {
  if (warm_up == 0) return "No Warm Up";
  return number_word(warm_up) + (warm_up == 1 ? " Epoch" : " Epochs") + " Warm Up";
}

std::string format_cell(const AggregateCell& cell) {
  if (!cell.improvement_pct) return "n/a";
  char buf[64];
  double v = *cell.improvement_pct;
  if (v == 0.0) v = 0.0;  // no "-0.00"
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string text = buf;
  if (text == "-0.00") text = "0.00";
  if (cell.significant) text += '*';
  return text;
}

std::string render(const AggregateReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::json: return render_json(report);
    case ReportFormat::markdown: return render_markdown(report);
  }
  return {};
}

AggregateReport emit_report(std::span<const eval::MetricsRecord> records, std::span<const std::size_t> warm_ups,
                            const std::filesystem::path& dir) {
  auto report = build_aggregate(records, warm_ups);
  std::filesystem::create_directories(dir);
  write_file(dir / "aggregate.csv", render(report, ReportFormat::csv));
  write_file(dir / "aggregate.md", render(report, ReportFormat::markdown));
  write_file(dir / "aggregate.json", render(report, ReportFormat::json));
  return report;
}

}  // namespace mdgan::experiment
