#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdgan/matrix.hpp"
#include "mdgan/nn/stack.hpp"

namespace mdgan::eval {

/// Root of the mean squared per-feature difference between `sample` and its
/// reconstruction by `model` (eval mode).
double rmse_score(nn::LayerStack& model, std::span<const double> sample);

/// rmse_score for every row of `samples`. Identical to scoring rows one at a time.
std::vector<double> rmse_scores(nn::LayerStack& model, const Matrix& samples);

/// Higher score = more anomalous; label 1 = anomaly.
struct ScoredTestSet {
  std::vector<double> scores;
  std::vector<int> labels;
};

/// Mann-Whitney form: P(score_pos > score_neg) + 0.5 P(tie).
double auc_roc(const ScoredTestSet& scored);

/// Step-wise area under the precision-recall curve (average precision).
/// Tied scores form one threshold.
double auc_pr(const ScoredTestSet& scored);

struct EerResult {
  double rate;
  /// Threshold (score >= threshold flags an anomaly) minimizing |FPR - FNR|.
  double threshold;
  double fpr_at_threshold;
  double fnr_at_threshold;
};

/// Equal error rate. Where FPR - FNR changes sign between adjacent thresholds
/// the crossing is linearly interpolated.
EerResult eer_detail(const ScoredTestSet& scored);
double eer(const ScoredTestSet& scored);

enum class Tails { one, two };

/// Critical |t| at 95% confidence. Tabulated for df in [1, 200]; normal
/// quantile beyond.
double t_critical_95(std::size_t df, Tails tails = Tails::two);

struct SignificanceResult {
  double mean_difference;
  double t_statistic;  // +/-inf when the differences are constant and nonzero
  std::size_t degrees_of_freedom;
  bool significant_at_95;
};

/// Paired t-test on d = a - b.
SignificanceResult paired_t_test(std::span<const double> a, std::span<const double> b,
                                 Tails tails = Tails::two);

struct MetricsRecord {
  std::string dataset;
  std::string config;  // "baseline" or "mdgan_w<warm-up>"
  std::uint64_t seed = 0;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  double eer = 0.0;
};

/// AUC-ROC, AUC-PR and EER of one scored test set (dataset/config/seed left empty).
MetricsRecord compute_metrics(const ScoredTestSet& scored);

enum class Metric { auc_roc, auc_pr, eer };

std::string to_string(Metric metric);
double metric_value(const MetricsRecord& record, Metric metric);
/// AUC-ROC and AUC-PR: higher is better. EER: lower is better.
bool higher_is_better(Metric metric);

struct ImprovementRow {
  Metric metric;
  double mean_mdgan;
  double mean_baseline;
  /// 100 (mean_mdgan - mean_baseline) / mean_baseline; unset when the baseline mean is 0.
  std::optional<double> improvement_pct;
  SignificanceResult significance;
};

/// One row per metric. Records are paired by seed; throws ConfigError when the
/// seed sets differ or contain duplicates.
std::vector<ImprovementRow> aggregate_improvement(std::span<const MetricsRecord> mdgan,
                                                  std::span<const MetricsRecord> baseline,
                                                  Tails tails = Tails::two);

}  // namespace mdgan::eval
