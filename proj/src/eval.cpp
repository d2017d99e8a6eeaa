#include "mdgan/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mdgan/error.hpp"

namespace mdgan::eval {
namespace {

// Student t quantiles for df = 1..200 (two-tailed: 0.975, one-tailed: 0.95).
constexpr std::array<double, 200> kTwoTailed95 = {
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004,
    2.262157, 2.228139, 2.200985, 2.178813, 2.160369, 2.144787, 2.131450, 2.119905,
    2.109816, 2.100922, 2.093024, 2.085963, 2.079614, 2.073873, 2.068658, 2.063899,
    2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272, 2.039513, 2.036933,
    2.034515, 2.032245, 2.030108, 2.028094, 2.026192, 2.024394, 2.022691, 2.021075,
    2.019541, 2.018082, 2.016692, 2.015368, 2.014103, 2.012896, 2.011741, 2.010635,
    2.009575, 2.008559, 2.007584, 2.006647, 2.005746, 2.004879, 2.004045, 2.003241,
    2.002465, 2.001717, 2.000995, 2.000298, 1.999624, 1.998972, 1.998341, 1.997730,
    1.997138, 1.996564, 1.996008, 1.995469, 1.994945, 1.994437, 1.993943, 1.993464,
    1.992997, 1.992543, 1.992102, 1.991673, 1.991254, 1.990847, 1.990450, 1.990063,
    1.989686, 1.989319, 1.988960, 1.988610, 1.988268, 1.987934, 1.987608, 1.987290,
    1.986979, 1.986675, 1.986377, 1.986086, 1.985802, 1.985523, 1.985251, 1.984984,
    1.984723, 1.984467, 1.984217, 1.983972, 1.983731, 1.983495, 1.983264, 1.983038,
    1.982815, 1.982597, 1.982383, 1.982173, 1.981967, 1.981765, 1.981567, 1.981372,
    1.981180, 1.980992, 1.980808, 1.980626, 1.980448, 1.980272, 1.980100, 1.979930,
    1.979764, 1.979600, 1.979439, 1.979280, 1.979124, 1.978971, 1.978820, 1.978671,
    1.978524, 1.978380, 1.978239, 1.978099, 1.977961, 1.977826, 1.977692, 1.977561,
    1.977431, 1.977304, 1.977178, 1.977054, 1.976931, 1.976811, 1.976692, 1.976575,
    1.976460, 1.976346, 1.976233, 1.976122, 1.976013, 1.975905, 1.975799, 1.975694,
    1.975590, 1.975488, 1.975387, 1.975288, 1.975189, 1.975092, 1.974996, 1.974902,
    1.974808, 1.974716, 1.974625, 1.974535, 1.974446, 1.974358, 1.974271, 1.974185,
    1.974100, 1.974017, 1.973934, 1.973852, 1.973771, 1.973691, 1.973612, 1.973534,
    1.973457, 1.973381, 1.973305, 1.973231, 1.973157, 1.973084, 1.973012, 1.972941,
    1.972870, 1.972800, 1.972731, 1.972663, 1.972595, 1.972528, 1.972462, 1.972396,
    1.972332, 1.972268, 1.972204, 1.972141, 1.972079, 1.972017, 1.971957, 1.971896,
};

constexpr std::array<double, 200> kOneTailed95 = {
    6.313752, 2.919986, 2.353363, 2.131847, 2.015048, 1.943180, 1.894579, 1.859548,
    1.833113, 1.812461, 1.795885, 1.782288, 1.770933, 1.761310, 1.753050, 1.745884,
    1.739607, 1.734064, 1.729133, 1.724718, 1.720743, 1.717144, 1.713872, 1.710882,
    1.708141, 1.705618, 1.703288, 1.701131, 1.699127, 1.697261, 1.695519, 1.693889,
    1.692360, 1.690924, 1.689572, 1.688298, 1.687094, 1.685954, 1.684875, 1.683851,
    1.682878, 1.681952, 1.681071, 1.680230, 1.679427, 1.678660, 1.677927, 1.677224,
    1.676551, 1.675905, 1.675285, 1.674689, 1.674116, 1.673565, 1.673034, 1.672522,
    1.672029, 1.671553, 1.671093, 1.670649, 1.670219, 1.669804, 1.669402, 1.669013,
    1.668636, 1.668271, 1.667916, 1.667572, 1.667239, 1.666914, 1.666600, 1.666294,
    1.665996, 1.665707, 1.665425, 1.665151, 1.664885, 1.664625, 1.664371, 1.664125,
    1.663884, 1.663649, 1.663420, 1.663197, 1.662978, 1.662765, 1.662557, 1.662354,
    1.662155, 1.661961, 1.661771, 1.661585, 1.661404, 1.661226, 1.661052, 1.660881,
    1.660715, 1.660551, 1.660391, 1.660234, 1.660081, 1.659930, 1.659782, 1.659637,
    1.659495, 1.659356, 1.659219, 1.659085, 1.658953, 1.658824, 1.658697, 1.658573,
    1.658450, 1.658330, 1.658212, 1.658096, 1.657982, 1.657870, 1.657759, 1.657651,
    1.657544, 1.657439, 1.657336, 1.657235, 1.657135, 1.657037, 1.656940, 1.656845,
    1.656752, 1.656659, 1.656569, 1.656479, 1.656391, 1.656305, 1.656219, 1.656135,
    1.656052, 1.655970, 1.655890, 1.655811, 1.655732, 1.655655, 1.655579, 1.655504,
    1.655430, 1.655357, 1.655285, 1.655215, 1.655145, 1.655076, 1.655007, 1.654940,
    1.654874, 1.654808, 1.654744, 1.654680, 1.654617, 1.654555, 1.654494, 1.654433,
    1.654373, 1.654314, 1.654256, 1.654198, 1.654141, 1.654085, 1.654029, 1.653974,
    1.653920, 1.653866, 1.653813, 1.653761, 1.653709, 1.653658, 1.653607, 1.653557,
    1.653508, 1.653459, 1.653411, 1.653363, 1.653316, 1.653269, 1.653223, 1.653177,
    1.653132, 1.653087, 1.653043, 1.652999, 1.652956, 1.652913, 1.652871, 1.652829,
    1.652787, 1.652746, 1.652705, 1.652665, 1.652625, 1.652586, 1.652547, 1.652508,
};
constexpr double kNormalTwoTailed95 = 1.959964;
constexpr double kNormalOneTailed95 = 1.644854;

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts validate(const ScoredTestSet& scored, bool need_negatives, bool need_positives) {
  if (scored.scores.size() != scored.labels.size()) {
    throw ConfigError("scores and labels differ in length");
  }
  ClassCounts counts;
  for (std::size_t i = 0; i < scored.labels.size(); ++i) {
    if (scored.labels[i] != 0 && scored.labels[i] != 1) throw ConfigError("labels must be 0 or 1");
    if (!std::isfinite(scored.scores[i])) throw ConfigError("scores must be finite");
    ++(scored.labels[i] == 1 ? counts.positives : counts.negatives);
  }
  if (need_positives && counts.positives == 0) throw ConfigError("metric needs at least one anomalous sample");
  if (need_negatives && counts.negatives == 0) throw ConfigError("metric needs at least one normal sample");
  return counts;
}

// Indices sorted by descending score.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  return order;
}

// Cumulative (true positive, false positive) counts after each group of tied scores,
// walking from the highest score down.
struct ThresholdPoint {
  double threshold;
  std::size_t tp;
  std::size_t fp;
  std::size_t group_positives;
};

std::vector<ThresholdPoint> threshold_sweep(const ScoredTestSet& scored) {
  const auto order = descending_order(scored.scores);
  std::vector<ThresholdPoint> points;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scored.scores[order[i]];
    std::size_t group_pos = 0;
    for (; i < order.size() && scored.scores[order[i]] == s; ++i) {
      if (scored.labels[order[i]] == 1) {
        ++tp;
        ++group_pos;
      } else {
        ++fp;
      }
    }
    points.push_back({s, tp, fp, group_pos});
  }
  return points;
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rmse_score(nn::LayerStack& model, std::span<const double> sample) {
  if (sample.size() != model.input_dim()) {
    throw ConfigError("sample has " + std::to_string(sample.size()) + " features, model expects " +
                      std::to_string(model.input_dim()));
  }
  Matrix x(1, sample.size(), std::vector<double>(sample.begin(), sample.end()));
  return rmse_scores(model, x).front();
}

std::vector<double> rmse_scores(nn::LayerStack& model, const Matrix& samples) {
  if (samples.cols() != model.input_dim() || model.output_dim() != model.input_dim()) {
    throw ConfigError("rmse_scores: sample width " + std::to_string(samples.cols()) +
                      " does not match the autoencoder");
  }
  const Matrix recon = model.forward(samples, nn::Mode::eval);
  std::vector<double> scores(samples.rows());
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < samples.cols(); ++c) {
      const double diff = samples(r, c) - recon(r, c);
      sum += diff * diff;
    }
    scores[r] = std::sqrt(sum / static_cast<double>(samples.cols()));
  }
  return scores;
}

double auc_roc(const ScoredTestSet& scored) {
  const auto counts = validate(scored, true, true);
  // Mid-ranks over ascending scores; ties share the average rank.
  std::vector<std::size_t> order(scored.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scored.scores[a] < scored.scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scored.scores[order[j]] == scored.scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scored.labels[order[k]] == 1) positive_rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(counts.positives);
  const double n = static_cast<double>(counts.negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double auc_pr(const ScoredTestSet& scored) {
  const auto counts = validate(scored, false, true);
  const double p = static_cast<double>(counts.positives);
  double area = 0.0;
  for (const auto& pt : threshold_sweep(scored)) {
    if (pt.group_positives == 0) continue;
    const double precision = static_cast<double>(pt.tp) / static_cast<double>(pt.tp + pt.fp);
    area += precision * static_cast<double>(pt.group_positives) / p;
  }
  return area;
}

EerResult eer_detail(const ScoredTestSet& scored) {
  const auto counts = validate(scored, true, true);
  const double p = static_cast<double>(counts.positives);
  const double n = static_cast<double>(counts.negatives);
  const auto sweep = threshold_sweep(scored);

  EerResult best{0.0, 0.0, 0.0, 1.0};
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& pt : sweep) {
    const double fpr = static_cast<double>(pt.fp) / n;
    const double fnr = 1.0 - static_cast<double>(pt.tp) / p;
    if (std::abs(fpr - fnr) < best_gap) {
      best_gap = std::abs(fpr - fnr);
      best = {0.0, pt.threshold, fpr, fnr};
    }
  }

  // The curve starts above every score (FPR 0, FNR 1) and ends below every
  // score (FPR 1, FNR 0), so FPR - FNR always crosses zero.
  double prev_fpr = 0.0;
  double prev_gap = -1.0;
  for (const auto& pt : sweep) {
    const double fpr = static_cast<double>(pt.fp) / n;
    const double fnr = 1.0 - static_cast<double>(pt.tp) / p;
    const double gap = fpr - fnr;
    if (gap == 0.0) {
      best.rate = fpr;
      return best;
    }
    if (gap > 0.0) {
      const double t = -prev_gap / (gap - prev_gap);
      best.rate = prev_fpr + t * (fpr - prev_fpr);
      return best;
    }
    prev_fpr = fpr;
    prev_gap = gap;
  }
  best.rate = 0.5 * (best.fpr_at_threshold + best.fnr_at_threshold);
  return best;
}

double eer(const ScoredTestSet& scored) { return eer_detail(scored).rate; }

double t_critical_95(std::size_t df, Tails tails) {
  if (df == 0) throw ConfigError("t critical value needs df >= 1");
  if (df <= kTwoTailed95.size()) return tails == Tails::two ? kTwoTailed95[df - 1] : kOneTailed95[df - 1];
  return tails == Tails::two ? kNormalTwoTailed95 : kNormalOneTailed95;
}

SignificanceResult paired_t_test(std::span<const double> a, std::span<const double> b, Tails tails) {
  if (a.size() != b.size()) throw ConfigError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw ConfigError("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double m = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  SignificanceResult r{m, 0.0, n - 1, false};
  if (sd == 0.0) {
    if (m != 0.0) {
      r.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), m);
      r.significant_at_95 = true;
    }
    return r;
  }
  r.t_statistic = m / (sd / std::sqrt(static_cast<double>(n)));
  const double crit = t_critical_95(r.degrees_of_freedom, tails);
  r.significant_at_95 = tails == Tails::two ? std::abs(r.t_statistic) > crit : r.t_statistic > crit;
  return r;
}

MetricsRecord compute_metrics(const ScoredTestSet& scored) {
  MetricsRecord rec;
  rec.auc_roc = auc_roc(scored);
  rec.auc_pr = auc_pr(scored);
  rec.eer = eer(scored);
  return rec;
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::auc_roc: return "auc_roc";
    case Metric::auc_pr: return "auc_pr";
    case Metric::eer: return "eer";
  }
  return "unknown";
}

double metric_value(const MetricsRecord& record, Metric metric) {
  switch (metric) {
    case Metric::auc_roc: return record.auc_roc;
    case Metric::auc_pr: return record.auc_pr;
    case Metric::eer: return record.eer;
  }
  return 0.0;
}

bool higher_is_better(Metric metric) { return metric != Metric::eer; }

std::vector<ImprovementRow> aggregate_improvement(std::span<const MetricsRecord> mdgan,
                                                  std::span<const MetricsRecord> baseline, Tails tails) {
  auto by_seed = [](std::span<const MetricsRecord> records, const char* which) {
    std::map<std::uint64_t, const MetricsRecord*> out;
    for (const auto& r : records) {
      if (!out.emplace(r.seed, &r).second) {
        throw ConfigError(std::string(which) + " records contain seed " + std::to_string(r.seed) + " twice");
      }
    }
    return out;
  };
  const auto m = by_seed(mdgan, "MDGAN");
  const auto b = by_seed(baseline, "baseline");
  if (m.size() != b.size() || !std::equal(m.begin(), m.end(), b.begin(), [](const auto& x, const auto& y) {
        return x.first == y.first;
      })) {
    throw ConfigError("MDGAN and baseline records are not paired by seed");
  }
  if (m.size() < 2) throw ConfigError("improvement aggregation needs at least two seeds");

  std::vector<ImprovementRow> rows;
  for (Metric metric : {Metric::auc_roc, Metric::auc_pr, Metric::eer}) {
    std::vector<double> a;
    std::vector<double> c;
    for (const auto& [seed, rec] : m) {
      a.push_back(metric_value(*rec, metric));
      c.push_back(metric_value(*b.at(seed), metric));
    }
    ImprovementRow row{metric, mean(a), mean(c), std::nullopt, paired_t_test(a, c, tails)};
    if (row.mean_baseline != 0.0) {
      row.improvement_pct = 100.0 * (row.mean_mdgan - row.mean_baseline) / row.mean_baseline;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mdgan::eval
