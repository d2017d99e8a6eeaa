#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "../support/gradcheck.hpp"
#include "mdgan/data.hpp"
#include "mdgan/error.hpp"
#include "mdgan/eval.hpp"

using namespace mdgan;
using namespace mdgan::data;

namespace {

CsvSchema label_schema() { return CsvSchema{"label", std::nullopt, std::nullopt, {}, {}}; }

RawDataset numeric_dataset(std::size_t normals, std::size_t anomalies) {
  RawDataset d;
  Column a{"a", false, {}, {}};
  Column b{"b", false, {}, {}};
  for (std::size_t i = 0; i < normals + anomalies; ++i) {
    a.numeric.push_back(static_cast<double>(i));
    b.numeric.push_back(static_cast<double>(i % 7));
    d.labels.push_back(i >= normals ? 1 : 0);
  }
  d.columns = {a, b};
  return d;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("csv: three rows, quoting and line endings") {
  const auto lf = parse_csv("x,y,label\n1,2,a\n3,4,b\n5,6,a\n", label_schema());
  CHECK(lf.rows() == 3);
  CHECK(lf.feature_names() == std::vector<std::string>{"x", "y"});
  CHECK(lf.labels == std::vector<int>{0, 1, 0});  // "b" is the minority class

  const auto crlf = parse_csv("x,y,label\r\n1,2,a\r\n3,4,b\r\n5,6,a\r\n", label_schema());
  const auto quoted = parse_csv("\"x\",\"y\",\"label\"\n\"1\",2,\"a\"\n3,\"4\",b\n5,6,\"a\"", label_schema());
  CHECK(feature_matrix(crlf) == feature_matrix(lf));
  CHECK(feature_matrix(quoted) == feature_matrix(lf));
  CHECK(crlf.labels == lf.labels);
  CHECK(quoted.labels == lf.labels);

  const auto embedded = parse_csv("name,label\n\"a, \"\"quoted\"\"\nvalue\",0\nb,1\nc,0\n", label_schema());
  REQUIRE(embedded.columns[0].categorical);
  CHECK(embedded.columns[0].categories[0] == "a, \"quoted\"\nvalue");
}

TEST_CASE("csv: errors carry line numbers or column names") {
  CHECK_THROWS_AS(parse_csv("", label_schema()), ParseError);
  CHECK_THROWS_AS(parse_csv("x,label\n", label_schema()), ParseError);
  try {
    parse_csv("x,y\n1,2\n", label_schema());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("'label'") != std::string::npos);
  }
  try {
    parse_csv("x,label\n1,0\n2,1\n3\n", label_schema());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_csv("x,label\n1,a\n2,b\n3,c\n", label_schema()), SchemaError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", label_schema()), ConfigError);
}

TEST_CASE("csv: missing values drop rows, positive label and partition column") {
  CsvSchema schema{"class", std::string("bad"), std::string("split"), {}, {"id"}};
  const auto d = parse_csv(
      "id,x,class,split\n"
      "1,0.5,good,train\n"
      "2,?,good,train\n"
      "3,1.5,bad,test\n"
      "4,,bad,train\n"
      "5,2.5,good,test\n"
      "6,NA,good,test\n",
      schema);
  CHECK(d.rows() == 3);
  CHECK(d.rejected_rows == 3);
  CHECK(d.feature_names() == std::vector<std::string>{"x"});
  CHECK(d.labels == std::vector<int>{0, 1, 0});
  REQUIRE(d.partition);
  CHECK(*d.partition == std::vector<PartitionTag>{PartitionTag::train, PartitionTag::test, PartitionTag::test});
}

TEST_CASE("drop_wide_categoricals: the three-value rule") {
  CsvSchema schema = label_schema();
  schema.categorical_columns = {"code"};
  const auto raw = parse_csv(
      "wide,narrow,code,num,label\n"
      "a,x,1,0.1,0\n"
      "b,y,2,0.2,0\n"
      "c,x,1,0.3,0\n"
      "d,y,2,0.4,1\n",
      schema);
  const auto d = drop_wide_categoricals(raw, 3);
  CHECK(d.feature_names() == std::vector<std::string>{"narrow=x", "narrow=y", "code=1", "code=2", "num"});
  const Matrix m = feature_matrix(d);
  CHECK(m.row(0)[0] == 1.0);
  CHECK(m.row(0)[1] == 0.0);
  CHECK(m.row(3)[3] == 1.0);

  const auto numeric = numeric_dataset(20, 2);
  const auto same = drop_wide_categoricals(numeric, 3);
  CHECK(feature_matrix(same) == feature_matrix(numeric));
  CHECK_THROWS_AS(feature_matrix(raw), ConfigError);
}

TEST_CASE("partition: 100 normals + 20 anomalies, train size 50") {
  const auto d = numeric_dataset(100, 20);
  PartitionPlan plan;
  plan.train_size = 50;
  const auto s = partition(d, plan, 7);
  CHECK(s.train.rows() == 45);
  CHECK(s.validation.rows() == 5);
  CHECK(s.test.rows() == 70);
  CHECK(std::count(s.test_labels.begin(), s.test_labels.end(), 1) == 20);
  CHECK(std::count(s.test_labels.begin(), s.test_labels.end(), 0) == 50);

  // column "a" holds the row index; anomalies are rows >= 100
  std::set<double> seen;
  for (const Matrix* m : {&s.train, &s.validation}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      CHECK((*m)(r, 0) < 100);
      seen.insert((*m)(r, 0));
    }
  }
  for (std::size_t r = 0; r < s.test.rows(); ++r) seen.insert(s.test(r, 0));
  CHECK(seen.size() == 120);

  const auto again = partition(d, plan, 7);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
  const auto other = partition(d, plan, 8);
  CHECK_FALSE(other.validation == s.validation);
}

TEST_CASE("partition: defaults and failure modes") {
  const auto d = numeric_dataset(100, 20);
  const auto s = partition(d, PartitionPlan{}, 1);
  CHECK(s.train.rows() + s.validation.rows() == 50);
  CHECK_THROWS_AS(partition(numeric_dataset(40, 0), PartitionPlan{}, 1), ConfigError);
  CHECK_THROWS_AS(partition(numeric_dataset(9, 3), PartitionPlan{false, 5, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(partition(d, PartitionPlan{false, 101, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(partition(d, PartitionPlan{true, std::nullopt, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(partition(d, PartitionPlan{false, 100, 0.1}, 1), ConfigError);  // no normals left for test
}

TEST_CASE("partition: predefined split strips anomalies from train before the validation draw") {
  auto d = numeric_dataset(60, 10);
  std::vector<PartitionTag> tags;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    // rows 0..39 and anomalies 60..64 tagged train
    const bool train = i < 40 || (i >= 60 && i < 65);
    tags.push_back(train ? PartitionTag::train : PartitionTag::test);
  }
  d.partition = tags;
  const auto s = partition(d, PartitionPlan{true, std::nullopt, 0.1}, 3);
  CHECK(s.train.rows() == 36);
  CHECK(s.validation.rows() == 4);
  CHECK(s.test.rows() == 25);  // 20 normals + 5 anomalies tagged test
  CHECK(std::count(s.test_labels.begin(), s.test_labels.end(), 1) == 5);
}

TEST_CASE("normalization") {
  const NormalizationSpec spec = fit_normalization(Matrix::from_rows({{0, 3}, {5, 3}, {10, 3}}));
  const Matrix out = spec.apply(Matrix::from_rows({{0, 3}, {5, 3}, {10, 3}, {12, 7}}));
  CHECK(out(0, 0) == -1.0);
  CHECK(out(1, 0) == 0.0);
  CHECK(out(2, 0) == 1.0);
  CHECK(out(3, 0) == doctest::Approx(1.4).epsilon(1e-15));
  for (std::size_t r = 0; r < 4; ++r) CHECK(out(r, 1) == 0.0);

  const auto d = make_synthetic({SyntheticKind::blob, 200, 20, 4, 3.0, 5});
  const auto split = fit_and_apply_normalization(partition(d, PartitionPlan{false, 120, 0.1}, 2));
  REQUIRE(split.normalization);
  for (const Matrix* m : {&split.train, &split.validation}) {
    for (double v : m->values()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  const Matrix pool = vstack(split.train, split.validation);
  for (std::size_t c = 0; c < pool.cols(); ++c) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t r = 0; r < pool.rows(); ++r) {
      lo = std::min(lo, pool(r, c));
      hi = std::max(hi, pool(r, c));
    }
    CHECK(lo == -1.0);
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("synthetic datasets") {
  const SyntheticSpec spec{SyntheticKind::blob, 100, 30, 5, 4.0, 11};
  const auto a = make_synthetic(spec);
  CHECK(a.rows() == 130);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 1) == 30);
  CHECK(feature_matrix(a) == feature_matrix(make_synthetic(spec)));
  for (auto kind : {SyntheticKind::two_moons_like, SyntheticKind::ring}) {
    const auto d = make_synthetic({kind, 50, 10, 3, 1.0, 2});
    CHECK(d.rows() == 60);
    CHECK(feature_matrix(d).all_finite());
  }
  CHECK_THROWS_AS(make_synthetic({SyntheticKind::blob, 10, 5, 3, 1.0, 1}), ConfigError);
  CHECK(parse_synthetic_kind("moons") == SyntheticKind::two_moons_like);

  // nearest-centroid oracle: large separation is perfectly detectable, zero separation is not
  auto centroid_auc = [](const RawDataset& d) {
    const Matrix x = feature_matrix(d);
    std::vector<double> centroid(x.cols(), 0.0);
    std::size_t normals = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      if (d.labels[r]) continue;
      ++normals;
      for (std::size_t c = 0; c < x.cols(); ++c) centroid[c] += x(r, c);
    }
    for (auto& v : centroid) v /= static_cast<double>(normals);
    eval::ScoredTestSet s{{}, d.labels};
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double dist = 0;
      for (std::size_t c = 0; c < x.cols(); ++c) dist += (x(r, c) - centroid[c]) * (x(r, c) - centroid[c]);
      s.scores.push_back(dist);
    }
    return eval::auc_roc(s);
  };
  CHECK(centroid_auc(make_synthetic({SyntheticKind::blob, 500, 100, 8, 20.0, 3})) == 1.0);
  CHECK(centroid_auc(make_synthetic({SyntheticKind::blob, 2000, 2000, 8, 0.0, 3})) ==
        doctest::Approx(0.5).epsilon(0.06));
  CHECK(centroid_auc(make_synthetic({SyntheticKind::ring, 500, 100, 2, 3.0, 3})) == 1.0);
}

TEST_CASE("write_csv round-trips through load_csv") {
  const auto d = make_synthetic({SyntheticKind::blob, 30, 5, 3, 2.0, 9});
  const auto path = std::filesystem::temp_directory_path() / "mdgan_roundtrip.csv";
  write_csv(d, path);
  const auto back = load_csv(path, CsvSchema{"label", std::string("1"), std::nullopt, {}, {}});
  CHECK(back.labels == d.labels);
  CHECK(feature_matrix(back) == feature_matrix(d));
  std::filesystem::remove(path);
}

}  // TEST_SUITE
