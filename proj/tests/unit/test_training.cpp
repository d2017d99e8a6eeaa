#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mdgan/data.hpp"
#include "mdgan/error.hpp"
#include "mdgan/eval.hpp"
#include "mdgan/nn/loss.hpp"
#include "mdgan/training.hpp"

using namespace mdgan;
using namespace mdgan::training;

namespace {

data::DatasetSplit blob_split(std::size_t normals, std::size_t dim, std::uint64_t seed) {
  const auto raw = data::make_synthetic({data::SyntheticKind::blob, normals, normals / 5, dim, 4.0, seed});
  return data::fit_and_apply_normalization(data::partition(raw, {false, normals * 4 / 5, 0.1}, seed));
}

TrainConfig small_config(std::size_t epochs, std::uint64_t seed) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("noise statistics and reproducibility") {
  Rng rng(1);
  const Matrix z = sample_noise(1000, 100, rng);
  CHECK(z.rows() == 1000);
  CHECK(z.cols() == 100);
  const auto v = z.values();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size();
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1) < 0.05);
  Rng a(5), b(5);
  CHECK(sample_noise(4, 3, a) == sample_noise(4, 3, b));
}

TEST_CASE("epoch batches cover every sample once and drop a trailing singleton") {
  Rng rng(2);
  const auto batches = epoch_batches(129, 64, rng);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size() == 64);
  CHECK(batches[1].size() == 64);
  const auto exact = epoch_batches(130, 64, rng);
  REQUIRE(exact.size() == 3);
  std::vector<std::size_t> all;
  for (const auto& b : exact) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("validation score is negative mean RMSE") {
  nn::LayerStack identity(2, 0);
  nn::AffineLayer a(2, 2);
  a.weights() = Matrix::from_rows({{1, 0}, {0, 1}});
  identity.add(a);
  CHECK(validation_score(identity, Matrix::from_rows({{0.2, 0.4}, {-1, 1}})) == 0.0);

  nn::LayerStack zero(2, 0);
  zero.add(nn::AffineLayer(2, 2));
  // rows with RMSE 0.1 and 0.3
  CHECK(validation_score(zero, Matrix::from_rows({{0.1, 0.1}, {0.3, -0.3}})) == doctest::Approx(-0.2));
  CHECK(validation_score(zero, Matrix::from_rows({{0.1, 0.1}})) > validation_score(zero, Matrix::from_rows({{0.2, 0.2}})));
  CHECK_THROWS_AS(validation_score(zero, Matrix(0, 2)), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(small_config(0, 1).validate(), ConfigError);
  auto c = small_config(1, 1);
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const auto split = blob_split(100, 4, 1);
  CHECK_THROWS_AS(train_baseline(split, small_config(0, 1)), ConfigError);
  CHECK(parse_g_loss_mode("saturating") == GLossMode::saturating);
  CHECK_THROWS_AS(parse_warm_up_unit("weeks"), ConfigError);
}

TEST_CASE("one iteration with a zero generator: D2's generated update is an autoencoder step on zeros") {
  TrainConfig config = small_config(1, 3);
  std::optional<Network> reference;
  std::optional<std::vector<Matrix>> after;
  MdganTrainer trainer(3, config, TrainHooks{[&](const StepEvent& e, const ModelTriple& m) {
    if (e.step != Step::d2_generated) return;
    if (e.before) {
      reference = m.d2;
    } else {
      after = m.d2.net.snapshot();
    }
  }});
  auto& g = trainer.models().g.net;
  // last affine layer of G feeds tanh; zero it so G(z) == 0
  for (auto it = g.layers().rbegin(); it != g.layers().rend(); ++it) {
    if (auto* affine = std::get_if<nn::AffineLayer>(&*it)) {
      affine->weights().fill(0.0);
      affine->bias().fill(0.0);
      break;
    }
  }

  const Matrix real = Matrix::from_rows({{0.5, -0.2, 0.1}, {-0.4, 0.3, 0.9}});
  const auto losses = trainer.iteration(real, true, 0);
  REQUIRE(reference);
  REQUIRE(after);

  const Matrix zeros(2, 3, 0.0);
  const Matrix recon = reference->net.forward(zeros, nn::Mode::train);
  const auto loss = nn::mse_loss(zeros, recon);
  CHECK(losses.d2_generated == loss.value);
  reference->net.backward(loss.grad);
  reference->optimizer.step(reference->net.parameters());
  CHECK(reference->net.snapshot() == *after);
}

TEST_CASE("freezing: D1 untouched by the G-on-D1 step, D2 untouched by the G-on-D2 step") {
  const auto split = blob_split(200, 5, 4);
  auto config = small_config(3, 7);
  std::vector<Matrix> before;
  std::size_t checked = 0;
  bool all_identical = true;
  TrainHooks hooks{[&](const StepEvent& e, const ModelTriple& m) {
    const nn::LayerStack* watched = e.step == Step::g_on_d1 ? &m.d1.net : e.step == Step::g_on_d2 ? &m.d2.net : nullptr;
    if (!watched) return;
    if (e.before) {
      before = watched->snapshot();
    } else {
      all_identical = all_identical && watched->snapshot() == before;
      ++checked;
    }
  }};
  train_mdgan(split, config, hooks);
  CHECK(all_identical);
  CHECK(checked == 2 * 3 * 5);  // 144 train rows, batch 32 -> 5 iterations per epoch
}

TEST_CASE("warm-up gating counts D2 generated-batch updates") {
  const auto split = blob_split(200, 4, 5);
  for (std::size_t w : {0u, 1u, 3u, 6u}) {
    auto config = small_config(4, 9);
    config.warm_up = w;
    std::vector<std::size_t> epochs_with_update;
    TrainHooks hooks{[&](const StepEvent& e, const ModelTriple&) {
      if (e.step == Step::d2_generated && !e.before) epochs_with_update.push_back(e.epoch);
    }};
    const auto result = train_mdgan(split, config, hooks);
    const std::size_t per_epoch = 5;
    const std::size_t active = w >= 4 ? 0 : 4 - w;
    CHECK(result.d2_generated_updates == active * per_epoch);
    for (auto epoch : epochs_with_update) CHECK(epoch >= w);
  }
  auto by_iteration = small_config(2, 9);
  by_iteration.warm_up = 3;
  by_iteration.warm_up_unit = WarmUpUnit::iterations;
  CHECK(train_mdgan(split, by_iteration).d2_generated_updates == 10 - 3);
}

TEST_CASE("warm-up longer than training reproduces the baseline exactly") {
  const auto split = blob_split(300, 6, 6);
  auto config = small_config(4, 11);
  config.warm_up = 4;
  const auto mdgan = train_mdgan(split, config);
  const auto baseline = train_baseline(split, config);
  CHECK(mdgan.best_model.snapshot() == baseline.best_model.snapshot());
  CHECK(mdgan.checkpoint.epoch == baseline.checkpoint.epoch);
}

TEST_CASE("trace and checkpoint contract") {
  const auto split = blob_split(200, 4, 8);
  const auto result = train_mdgan(split, small_config(5, 2));
  REQUIRE(result.trace.size() == 5);
  double best = -1e300;
  std::size_t best_epoch = 0;
  for (const auto& r : result.trace) {
    CHECK(r.d1_real);
    CHECK(r.g_d2);
    for (auto v : {*r.d1_real, *r.d1_generated, *r.g_d1, *r.d2_real, *r.d2_generated, *r.g_d2, r.validation_score}) {
      CHECK(std::isfinite(v));
    }
    if (r.validation_score > best) {
      best = r.validation_score;
      best_epoch = r.epoch;
    }
  }
  CHECK(result.checkpoint.epoch == best_epoch);
  CHECK(result.checkpoint.validation_score == best);
  auto model = result.best_model;
  CHECK(validation_score(model, split.validation) == best);

  const std::string csv = trace_to_csv(result.trace);
  CHECK(csv.rfind("epoch,loss_name,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * 7);

  const auto again = train_mdgan(split, small_config(5, 2));
  CHECK(again.best_model.snapshot() == result.best_model.snapshot());
  CHECK(trace_to_csv(again.trace) == csv);
}

TEST_CASE("baseline learns a constant dataset") {
  data::DatasetSplit split;
  split.train = Matrix(1000, 4, 0.0);
  for (std::size_t r = 0; r < 1000; ++r) {
    const double row[] = {0.5, -0.3, 0.2, 0.7};
    for (std::size_t c = 0; c < 4; ++c) split.train(r, c) = row[c];
  }
  split.validation = select_rows(split.train, std::vector<std::size_t>{0, 1, 2, 3});
  split.test = split.validation;
  split.test_labels = {0, 0, 1, 1};
  auto config = small_config(30, 1);
  auto result = train_baseline(split, config);
  const Matrix recon = result.best_model.forward(split.validation, nn::Mode::eval);
  CHECK(nn::mse_loss(split.validation, recon).value < 1e-3);
  REQUIRE(result.trace.size() == 30);
  for (const auto& r : result.trace) {
    CHECK(r.d2_real);
    CHECK_FALSE(r.d1_real);
  }
}

TEST_CASE("divergence is reported with the step and epoch") {
  const auto split = blob_split(100, 4, 3);
  auto config = small_config(2, 1);
  config.g_optimizer = nn::AdamSettings{1e300};
  config.d2_optimizer = nn::AdamSettings{1e300};
  try {
    train_mdgan(split, config);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK_FALSE(e.step().empty());
    CHECK(e.epoch() < 2);
  }
}

}  // TEST_SUITE
