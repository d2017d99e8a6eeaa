#include "mdgan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mdgan/error.hpp"
#include "mdgan/rng.hpp"

namespace mdgan::data {
namespace {

struct Record {
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  std::size_t line;
};

std::vector<Record> split_records(std::string_view text) {
  std::vector<Record> records;
  Record current{{}, {}, 1};
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool record_has_content = false;
  std::size_t line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    current.quoted.push_back(field_quoted);
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty() && !current.quoted[0];
    if (!blank) records.push_back(std::move(current));
    current = Record{{}, {}, line};
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() && std::any_of(field.begin(), field.end(), [](char ch) { return ch != ' ' && ch != '\t'; })) {
          throw ParseError("unexpected quote inside unquoted field", line);
        }
        field.clear();
        in_quotes = true;
        field_quoted = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        record_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  if (record_has_content || !field.empty()) end_record();
  return records;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool is_missing(const std::string& s) { return s.empty() || s == "?" || s == "NA"; }

std::optional<PartitionTag> parse_partition(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "train" || s == "training") return PartitionTag::train;
  if (s == "test" || s == "testing") return PartitionTag::test;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t round_half_even(std::size_t numerator, std::size_t denominator) {
  std::size_t q = numerator / denominator;
  const std::size_t twice_rem = 2 * (numerator % denominator);
  if (twice_rem > denominator || (twice_rem == denominator && q % 2 == 1)) ++q;
  return q;
}

}  // namespace

std::vector<std::string> RawDataset::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

RawDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), schema);
}

RawDataset parse_csv(std::string_view text, const CsvSchema& schema) {
  auto records = split_records(text);
  if (records.empty()) throw ParseError("empty CSV file", 0);
  if (records.size() == 1) throw ParseError("CSV file has a header but no data rows", 1);

  std::vector<std::string> header;
  for (auto& h : records.front().fields) header.push_back(trim(h));
  const std::size_t width = header.size();

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto label_idx = find_column(schema.label_column);
  if (!label_idx) throw SchemaError("label column '" + schema.label_column + "' not found in CSV header");
  std::optional<std::size_t> partition_idx;
  if (schema.partition_column) {
    partition_idx = find_column(*schema.partition_column);
    if (!partition_idx) {
      throw SchemaError("partition column '" + *schema.partition_column + "' not found in CSV header");
    }
  }
  for (const auto& name : schema.categorical_columns) {
    if (!find_column(name)) throw SchemaError("categorical column '" + name + "' not found in CSV header");
  }

  std::vector<std::size_t> feature_idx;
  for (std::size_t i = 0; i < width; ++i) {
    if (i == *label_idx || (partition_idx && i == *partition_idx)) continue;
    if (std::find(schema.ignore_columns.begin(), schema.ignore_columns.end(), header[i]) !=
        schema.ignore_columns.end()) {
      continue;
    }
    feature_idx.push_back(i);
  }

  // Collect raw string cells of accepted rows.
  std::vector<std::vector<std::string>> cells(width);
  std::vector<std::size_t> lines;
  std::size_t rejected = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(rec.fields.size()),
                       rec.line);
    }
    std::vector<std::string> row(width);
    bool missing = false;
    for (std::size_t i = 0; i < width; ++i) {
      row[i] = rec.quoted[i] ? rec.fields[i] : trim(rec.fields[i]);
      const bool used = i == *label_idx || (partition_idx && i == *partition_idx) ||
                        std::find(feature_idx.begin(), feature_idx.end(), i) != feature_idx.end();
      if (used && is_missing(row[i])) missing = true;
    }
    if (missing) {
      ++rejected;
      continue;
    }
    for (std::size_t i = 0; i < width; ++i) cells[i].push_back(std::move(row[i]));
    lines.push_back(rec.line);
  }
  if (lines.empty()) throw ParseError("no complete data rows in CSV file", 0);

  RawDataset out;
  out.rejected_rows = rejected;

  for (std::size_t i : feature_idx) {
    Column col;
    col.name = header[i];
    const bool forced = std::find(schema.categorical_columns.begin(), schema.categorical_columns.end(),
                                  header[i]) != schema.categorical_columns.end();
    std::vector<double> numbers;
    bool numeric = !forced;
    for (const auto& cell : cells[i]) {
      if (!numeric) break;
      if (auto v = parse_number(cell)) {
        numbers.push_back(*v);
      } else {
        numeric = false;
      }
    }
    if (numeric) {
      col.numeric = std::move(numbers);
    } else {
      col.categorical = true;
      col.categories = cells[i];
    }
    out.columns.push_back(std::move(col));
  }

  // Labels: declared positive value, or the minority class.
  const auto& label_cells = cells[*label_idx];
  std::string positive;
  if (schema.positive_label) {
    positive = *schema.positive_label;
  } else {
    std::map<std::string, std::size_t> counts;
    for (const auto& v : label_cells) ++counts[v];
    if (counts.size() > 2) {
      throw SchemaError("label column '" + schema.label_column + "' has " + std::to_string(counts.size()) +
                        " distinct values; declare the anomaly value explicitly");
    }
    if (counts.size() == 2) {
      auto first = counts.begin();
      auto second = std::next(first);
      // Ties pick the lexicographically larger value so the choice is stable.
      positive = first->second < second->second ? first->first : second->first;
    }
  }
  out.labels.reserve(label_cells.size());
  for (const auto& v : label_cells) out.labels.push_back(!positive.empty() && v == positive ? 1 : 0);

  if (partition_idx) {
    std::vector<PartitionTag> tags;
    for (std::size_t r = 0; r < cells[*partition_idx].size(); ++r) {
      auto tag = parse_partition(cells[*partition_idx][r]);
      if (!tag) {
        throw ParseError("partition value '" + cells[*partition_idx][r] + "' is neither train nor test",
                         lines[r]);
      }
      tags.push_back(*tag);
    }
    out.partition = std::move(tags);
  }
  return out;
}

void write_csv(const RawDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  for (const auto& col : data.columns) out << csv_escape(col.name) << ',';
  out << "label";
  if (data.partition) out << ",partition";
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (const auto& col : data.columns) {
      out << (col.categorical ? csv_escape(col.categories[r]) : format_double(col.numeric[r])) << ',';
    }
    out << data.labels[r];
    if (data.partition) out << ',' << ((*data.partition)[r] == PartitionTag::train ? "train" : "test");
    out << '\n';
  }
}

RawDataset drop_wide_categoricals(const RawDataset& data, std::size_t max_values) {
  RawDataset out;
  out.labels = data.labels;
  out.partition = data.partition;
  out.rejected_rows = data.rejected_rows;
  for (const auto& col : data.columns) {
    if (!col.categorical) {
      out.columns.push_back(col);
      continue;
    }
    const std::set<std::string> values(col.categories.begin(), col.categories.end());
    if (values.size() > max_values) continue;
    for (const auto& value : values) {
      Column indicator;
      indicator.name = col.name + "=" + value;
      indicator.numeric.reserve(col.categories.size());
      for (const auto& v : col.categories) indicator.numeric.push_back(v == value ? 1.0 : 0.0);
      out.columns.push_back(std::move(indicator));
    }
  }
  return out;
}

Matrix feature_matrix(const RawDataset& data) {
  if (data.columns.empty()) throw ConfigError("dataset has no feature columns");
  Matrix m(data.rows(), data.columns.size());
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    const auto& col = data.columns[c];
    if (col.categorical) {
      throw ConfigError("column '" + col.name + "' is still categorical; run drop_wide_categoricals first");
    }
    if (col.numeric.size() != data.rows()) throw ConfigError("column '" + col.name + "' has the wrong length");
    for (std::size_t r = 0; r < data.rows(); ++r) m(r, c) = col.numeric[r];
  }
  return m;
}

Matrix NormalizationSpec::apply(const Matrix& m) const {
  if (m.cols() != min.size()) throw ConfigError("normalization fitted on a different feature count");
  Matrix out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const double range = max[c] - min[c];
    for (std::size_t r = 0; r < m.rows(); ++r) {
      out(r, c) = range > 0.0 ? 2.0 * (m(r, c) - min[c]) / range - 1.0 : 0.0;
    }
  }
  return out;
}

NormalizationSpec fit_normalization(const Matrix& pool) {
  if (pool.rows() == 0) throw ConfigError("cannot fit normalization on an empty training set");
  NormalizationSpec spec{std::vector<double>(pool.row(0).begin(), pool.row(0).end()),
                         std::vector<double>(pool.row(0).begin(), pool.row(0).end())};
  for (std::size_t r = 1; r < pool.rows(); ++r) {
    for (std::size_t c = 0; c < pool.cols(); ++c) {
      spec.min[c] = std::min(spec.min[c], pool(r, c));
      spec.max[c] = std::max(spec.max[c], pool(r, c));
    }
  }
  return spec;
}

DatasetSplit fit_and_apply_normalization(DatasetSplit split) {
  auto spec = fit_normalization(vstack(split.train, split.validation));
  split.train = spec.apply(split.train);
  if (!split.validation.empty()) split.validation = spec.apply(split.validation);
  if (!split.test.empty()) split.test = spec.apply(split.test);
  split.normalization = std::move(spec);
  return split;
}

DatasetSplit partition(const RawDataset& data, const PartitionPlan& plan, std::uint64_t seed) {
  if (!(plan.validation_fraction > 0.0 && plan.validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
  const Matrix features = feature_matrix(data);
  const std::size_t n = data.rows();
  const std::size_t anomalies = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), 1));
  if (anomalies == 0) throw ConfigError("dataset contains no anomalies; nothing to evaluate");

  std::vector<std::size_t> pool;
  std::vector<std::size_t> test;

  if (plan.use_predefined) {
    if (!data.partition) throw ConfigError("predefined partition requested but the dataset has no partition column");
    for (std::size_t r = 0; r < n; ++r) {
      if ((*data.partition)[r] == PartitionTag::test) {
        test.push_back(r);
      } else if (data.labels[r] == 0) {
        pool.push_back(r);
      }
    }
  } else {
    std::vector<std::size_t> normals;
    for (std::size_t r = 0; r < n; ++r) {
      (data.labels[r] == 1 ? test : normals).push_back(r);
    }
    const std::size_t train_size = plan.train_size.value_or(normals.size() / 2);
    if (normals.size() < kMinNormalPool) {
      throw ConfigError("need at least " + std::to_string(kMinNormalPool) + " normal samples, found " +
                        std::to_string(normals.size()));
    }
    if (train_size > normals.size()) {
      throw ConfigError("train size " + std::to_string(train_size) + " exceeds the " +
                        std::to_string(normals.size()) + " normal samples available");
    }
    Rng rng = make_rng(derive_seed(seed, "allocation"));
    std::shuffle(normals.begin(), normals.end(), rng);
    pool.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(train_size));
    test.insert(test.end(), normals.begin() + static_cast<std::ptrdiff_t>(train_size), normals.end());
    std::sort(pool.begin(), pool.end());
    std::sort(test.begin(), test.end());
  }

  if (pool.size() < kMinNormalPool) {
    throw ConfigError("training pool has " + std::to_string(pool.size()) + " normal samples; need at least " +
                      std::to_string(kMinNormalPool));
  }
  const bool test_has_anomaly = std::any_of(test.begin(), test.end(), [&](auto r) { return data.labels[r] == 1; });
  const bool test_has_normal = std::any_of(test.begin(), test.end(), [&](auto r) { return data.labels[r] == 0; });
  if (!test_has_anomaly || !test_has_normal) {
    throw ConfigError("test split must contain both normal and anomalous samples");
  }

  // Fraction expressed in parts per million so rounding is exact integer arithmetic.
  const auto ppm = static_cast<std::size_t>(std::llround(plan.validation_fraction * 1e6));
  std::size_t n_validation = round_half_even(pool.size() * ppm, 1'000'000);
  n_validation = std::clamp<std::size_t>(n_validation, 1, pool.size() - 1);

  std::vector<std::size_t> shuffled = pool;
  Rng rng = make_rng(derive_seed(seed, "validation"));
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::size_t> validation(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_validation));
  std::vector<std::size_t> train(shuffled.begin() + static_cast<std::ptrdiff_t>(n_validation), shuffled.end());
  std::sort(validation.begin(), validation.end());
  std::sort(train.begin(), train.end());

  DatasetSplit split;
  split.train = select_rows(features, train);
  split.validation = select_rows(features, validation);
  split.test = select_rows(features, test);
  for (auto r : test) split.test_labels.push_back(data.labels[r]);
  split.feature_names = data.feature_names();
  return split;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "blob") return SyntheticKind::blob;
  if (name == "two_moons_like" || name == "moons") return SyntheticKind::two_moons_like;
  if (name == "ring") return SyntheticKind::ring;
  throw ConfigError("unknown synthetic dataset kind '" + std::string(name) + "'");
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::blob: return "blob";
    case SyntheticKind::two_moons_like: return "two_moons_like";
    case SyntheticKind::ring: return "ring";
  }
  return "unknown";
}

RawDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_normal < 20) throw ConfigError("synthetic datasets need at least 20 normal samples");
  if (spec.dim < 1) throw ConfigError("synthetic dimension must be >= 1");
  if (spec.kind != SyntheticKind::blob && spec.dim < 2) {
    throw ConfigError("two_moons_like and ring datasets need dim >= 2");
  }
  if (!std::isfinite(spec.separation) || spec.separation < 0.0) throw ConfigError("separation must be >= 0");

  Rng rng = make_rng(derive_seed(spec.seed, "synthetic"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double shift = spec.separation / std::sqrt(static_cast<double>(spec.dim));
  constexpr double kNoise = 0.1;

  auto sample = [&](bool anomaly, std::vector<double>& row) {
    switch (spec.kind) {
      case SyntheticKind::blob:
        for (auto& v : row) v = gauss(rng) + (anomaly ? shift : 0.0);
        break;
      case SyntheticKind::two_moons_like: {
        const double theta = std::numbers::pi * unit(rng);
        const bool upper = unit(rng) < 0.5;
        row[0] = upper ? std::cos(theta) : 1.0 - std::cos(theta);
        row[1] = upper ? std::sin(theta) : 0.5 - std::sin(theta);
        for (auto& v : row) v += kNoise * gauss(rng);
        if (anomaly) {
          for (auto& v : row) v += shift;
        }
        break;
      }
      case SyntheticKind::ring: {
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        const double radius = 1.0 + (anomaly ? spec.separation : 0.0) + kNoise * gauss(rng);
        row[0] = radius * std::cos(theta);
        row[1] = radius * std::sin(theta);
        for (std::size_t c = 2; c < row.size(); ++c) row[c] = kNoise * gauss(rng);
        break;
      }
    }
  };

  RawDataset out;
  out.columns.resize(spec.dim);
  for (std::size_t c = 0; c < spec.dim; ++c) out.columns[c].name = "x" + std::to_string(c);
  std::vector<double> row(spec.dim);
  for (std::size_t i = 0; i < spec.n_normal + spec.n_anomaly; ++i) {
    const bool anomaly = i >= spec.n_normal;
    std::fill(row.begin(), row.end(), 0.0);
    sample(anomaly, row);
    for (std::size_t c = 0; c < spec.dim; ++c) out.columns[c].numeric.push_back(row[c]);
    out.labels.push_back(anomaly ? 1 : 0);
  }
  return out;
}

}  // namespace mdgan::data
