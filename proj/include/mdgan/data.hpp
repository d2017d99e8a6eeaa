#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdgan/matrix.hpp"

namespace mdgan::data {

enum class PartitionTag { train, test };

struct Column {
  std::string name;
  bool categorical = false;
  std::vector<double> numeric;          // used when !categorical
  std::vector<std::string> categories;  // used when categorical

  std::size_t size() const noexcept { return categorical ? categories.size() : numeric.size(); }
};

/// Feature columns plus binary labels (1 = anomaly, the minority or declared
/// positive class) and an optional predefined train/test tag per row.
struct RawDataset {
  std::vector<Column> columns;
  std::vector<int> labels;
  std::optional<std::vector<PartitionTag>> partition;
  std::size_t rejected_rows = 0;  // rows dropped for missing values

  std::size_t rows() const noexcept { return labels.size(); }
  std::vector<std::string> feature_names() const;
};

struct CsvSchema {
  std::string label_column;
  /// Label value marking anomalies. When unset the minority class is used.
  std::optional<std::string> positive_label;
  /// Column holding "train"/"test" for datasets with predefined partitions.
  std::optional<std::string> partition_column;
  /// Columns treated as categorical even when every value parses as a number.
  std::vector<std::string> categorical_columns;
  std::vector<std::string> ignore_columns;
};

/// RFC-4180 CSV with a header row. LF and CRLF line endings are accepted.
/// Rows containing an empty, "?" or "NA" field are dropped and counted.
RawDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
RawDataset parse_csv(std::string_view text, const CsvSchema& schema);

/// Writes features plus a `label` column (0/1) and, when present, a `partition` column.
void write_csv(const RawDataset& data, const std::filesystem::path& path);

/// Removes categorical columns with more than `max_values` distinct values
/// and one-hot encodes the remaining ones (columns named "<col>=<value>",
/// values in sorted order).
RawDataset drop_wide_categoricals(const RawDataset& data, std::size_t max_values = 3);

/// Numeric feature matrix. Throws ConfigError if categorical columns remain.
Matrix feature_matrix(const RawDataset& data);

struct NormalizationSpec {
  std::vector<double> min;
  std::vector<double> max;

  /// x -> 2 (x - min) / (max - min) - 1 per feature; degenerate features map to 0.
  /// No clipping: values outside the fitted range land outside [-1, 1].
  Matrix apply(const Matrix& m) const;
};

NormalizationSpec fit_normalization(const Matrix& pool);

struct DatasetSplit {
  Matrix train;       // normal samples only
  Matrix validation;  // normal samples only
  Matrix test;
  std::vector<int> test_labels;
  std::vector<std::string> feature_names;
  std::optional<NormalizationSpec> normalization;

  std::size_t feature_dim() const noexcept { return train.cols(); }
};

struct PartitionPlan {
  bool use_predefined = false;
  /// Size of the normal training pool (train + validation) when no predefined
  /// partition is used. Defaults to half of the normal samples.
  std::optional<std::size_t> train_size;
  double validation_fraction = 0.1;
};

/// Minimum size of the normal training pool.
inline constexpr std::size_t kMinNormalPool = 10;

DatasetSplit partition(const RawDataset& data, const PartitionPlan& plan, std::uint64_t seed);

/// Fits min/max on the training pool (train + validation) and applies it to every split.
DatasetSplit fit_and_apply_normalization(DatasetSplit split);

enum class SyntheticKind { blob, two_moons_like, ring };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::blob;
  std::size_t n_normal = 1000;
  std::size_t n_anomaly = 100;
  std::size_t dim = 8;
  double separation = 4.0;  // in units of the normal cluster's spread
  std::uint64_t seed = 0;
};

/// Normal rows first, then anomalies. Columns are named x0..x{dim-1}.
///  - blob: N(0, I); anomalies N(separation * u, I), u = (1,...,1)/sqrt(dim).
///  - two_moons_like: interleaved half circles in the first two coordinates,
///    noise 0.1 elsewhere; anomalies are the same shape shifted by separation * u.
///  - ring: unit circle with radial noise 0.1; anomalies on radius 1 + separation.
RawDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace mdgan::data
