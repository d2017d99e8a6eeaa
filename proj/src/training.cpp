#include "mdgan/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "mdgan/error.hpp"
#include "mdgan/eval.hpp"
#include "mdgan/nn/loss.hpp"

namespace mdgan::training {
namespace {

using nn::Mode;

double checked(double loss, Step step, std::size_t epoch) {
  if (!std::isfinite(loss)) throw DivergenceError(to_string(step), epoch, loss);
  return loss;
}

const Matrix& checked(const Matrix& output, Step step, std::size_t epoch) {
  if (!output.all_finite()) throw DivergenceError(to_string(step), epoch, std::numeric_limits<double>::quiet_NaN());
  return output;
}

Matrix negated(Matrix m) {
  for (double& v : m.values()) v = -v;
  return m;
}

void add_into(Matrix& acc, const Matrix& other) {
  auto a = acc.values();
  const auto b = other.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

// Loss and gradient w.r.t. the autoencoder output for reconstructing `input`.
nn::LossResult reconstruction_step(Network& ae, const Matrix& input, Step step, std::size_t epoch) {
  const Matrix recon = ae.net.forward(input, Mode::train);
  auto loss = nn::mse_loss(input, recon);
  checked(loss.value, step, epoch);
  ae.net.backward(loss.grad);
  ae.optimizer.step(ae.net.parameters());
  return loss;
}

struct EpochAccumulator {
  std::size_t count = 0;
  double d1_real = 0, d1_generated = 0, g_d1 = 0, d2_real = 0, d2_generated = 0, g_d2 = 0;

  void add(const IterationLosses& l) {
    ++count;
    d1_real += l.d1_real;
    d1_generated += l.d1_generated;
    g_d1 += l.g_d1;
    d2_real += l.d2_real;
    d2_generated += l.d2_generated;
    g_d2 += l.g_d2;
  }
};

void require_trainable(const data::DatasetSplit& data, const TrainConfig& config) {
  config.validate();
  if (data.train.rows() < 2) throw ConfigError("training split needs at least two samples");
  if (data.validation.rows() == 0) throw ConfigError("validation split is empty");
  if (data.validation.cols() != data.train.cols()) throw ConfigError("validation width differs from train width");
}

void update_checkpoint(TrainResult& result, const nn::LayerStack& model, std::size_t epoch, double score,
                       bool& have_checkpoint) {
  if (!have_checkpoint || score > result.checkpoint.validation_score) {
    result.best_model = model;
    result.checkpoint = {epoch, score};
    have_checkpoint = true;
  }
}

}  // namespace

GLossMode parse_g_loss_mode(const std::string& name) {
  if (name == "non_saturating") return GLossMode::non_saturating;
  if (name == "saturating") return GLossMode::saturating;
  throw ConfigError("unknown g_loss_mode '" + name + "' (expected non_saturating or saturating)");
}

std::string to_string(GLossMode mode) {
  return mode == GLossMode::non_saturating ? "non_saturating" : "saturating";
}

WarmUpUnit parse_warm_up_unit(const std::string& name) {
  if (name == "epochs") return WarmUpUnit::epochs;
  if (name == "iterations") return WarmUpUnit::iterations;
  throw ConfigError("unknown warm_up_unit '" + name + "' (expected epochs or iterations)");
}

std::string to_string(WarmUpUnit unit) { return unit == WarmUpUnit::epochs ? "epochs" : "iterations"; }

std::string to_string(Step step) {
  switch (step) {
    case Step::d1_real: return "optimize D1 on real batch";
    case Step::d1_generated: return "optimize D1 on generated batch";
    case Step::g_on_d1: return "optimize G on D1";
    case Step::d2_real: return "optimize D2 on real batch";
    case Step::d2_generated: return "optimize D2 on generated batch";
    case Step::g_on_d2: return "optimize G on D2";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batch normalization)");
}

ModelTriple build_triple(std::size_t feature_dim, const TrainConfig& config) {
  const auto& o = config.model;
  auto g_spec = models::GeneratorSpec::defaults_for(feature_dim);
  if (o.latent_dim) g_spec.latent_dim = *o.latent_dim;
  if (o.g_hidden) g_spec.hidden_dims = *o.g_hidden;
  g_spec.batch_norm = o.g_batch_norm;
  g_spec.dropout_rate = o.g_dropout;

  auto d1_spec = models::D1Spec::defaults_for(feature_dim);
  if (o.d1_hidden) d1_spec.hidden_dims = *o.d1_hidden;
  d1_spec.dropout_rate = o.d1_dropout;

  return ModelTriple{
      Network{models::build_generator(g_spec, derive_seed(config.seed, "g_init")), nn::Optimizer(config.g_optimizer)},
      Network{models::build_d1(d1_spec, derive_seed(config.seed, "d1_init")), nn::Optimizer(config.d1_optimizer)},
      build_autoencoder(feature_dim, config),
      g_spec.latent_dim,
  };
}

Network build_autoencoder(std::size_t feature_dim, const TrainConfig& config) {
  return Network{models::build_d2(feature_dim, derive_seed(config.seed, "d2_init")),
                 nn::Optimizer(config.d2_optimizer)};
}

std::string trace_to_csv(const LossTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss_name,value\n";
  auto emit = [&](std::size_t epoch, const char* name, const std::optional<double>& v) {
    if (v) out << epoch << ',' << name << ',' << *v << '\n';
  };
  for (const auto& r : trace) {
    emit(r.epoch, "d1_real", r.d1_real);
    emit(r.epoch, "d1_generated", r.d1_generated);
    emit(r.epoch, "g_d1", r.g_d1);
    emit(r.epoch, "d2_real", r.d2_real);
    emit(r.epoch, "d2_generated", r.d2_generated);
    emit(r.epoch, "g_d2", r.g_d2);
    emit(r.epoch, "validation_score", r.validation_score);
  }
  return out.str();
}

Matrix sample_noise(std::size_t batch, std::size_t latent_dim, Rng& rng) {
  if (batch == 0 || latent_dim == 0) throw ConfigError("noise batch and latent dimension must be >= 1");
  Matrix z(batch, latent_dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : z.values()) v = gauss(rng);
  return z;
}

double validation_score(nn::LayerStack& model, const Matrix& validation) {
  if (validation.rows() == 0) throw ConfigError("validation set is empty");
  const auto scores = eval::rmse_scores(model, validation);
  return -std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// ---------------------------------------------------------------------------

MdganTrainer::MdganTrainer(std::size_t feature_dim, const TrainConfig& config, TrainHooks hooks)
    : config_(config),
      hooks_(std::move(hooks)),
      models_(build_triple(feature_dim, config)),
      noise_rng_(make_rng(derive_seed(config.seed, "noise"))) {
  config_.validate();
}

void MdganTrainer::notify(Step step, bool before, std::size_t epoch) const {
  if (hooks_.on_step) hooks_.on_step(StepEvent{step, before, epoch, iteration_}, models_);
}

IterationLosses MdganTrainer::iteration(const Matrix& real_batch, bool train_d2_on_generated, std::size_t epoch) {
  auto& [g, d1, d2, latent_dim] = models_;
  const std::size_t b = real_batch.rows();
  IterationLosses losses{};

  // (1) D1 on real samples, target "real".
  notify(Step::d1_real, true, epoch);
  {
    const Matrix p = d1.net.forward(real_batch, Mode::train);
    auto loss = nn::bce_loss(p, Matrix(b, 1, 1.0));
    losses.d1_real = checked(loss.value, Step::d1_real, epoch);
    d1.net.backward(loss.grad);
    d1.optimizer.step(d1.net.parameters());
  }
  notify(Step::d1_real, false, epoch);

  // (2) z ~ N(0, 1), generated batch of equal size. G keeps its forward cache
  // for step (4).
  const Matrix z = sample_noise(b, latent_dim, noise_rng_);
  const Matrix generated = checked(g.net.forward(z, Mode::train), Step::d1_generated, epoch);

  // (3) D1 on generated samples, target "fake".
  notify(Step::d1_generated, true, epoch);
  {
    const Matrix p = d1.net.forward(generated, Mode::train);
    auto loss = nn::bce_loss(p, Matrix(b, 1, 0.0));
    losses.d1_generated = checked(loss.value, Step::d1_generated, epoch);
    d1.net.backward(loss.grad);
    d1.optimizer.step(d1.net.parameters());
  }
  notify(Step::d1_generated, false, epoch);

  // (4) G against D1. D1 runs frozen: gradients reach G, D1 is not written.
  notify(Step::g_on_d1, true, epoch);
  {
    const Matrix p = d1.net.forward(generated, Mode::frozen);
    nn::LossResult loss{0.0, {}};
    if (config_.g_loss_mode == GLossMode::non_saturating) {
      loss = nn::bce_loss(p, Matrix(b, 1, 1.0));
    } else {
      // log(1 - p) == -bce(p, 0)
      auto fake = nn::bce_loss(p, Matrix(b, 1, 0.0));
      loss = {-fake.value, negated(std::move(fake.grad))};
    }
    losses.g_d1 = checked(loss.value, Step::g_on_d1, epoch);
    const Matrix grad_generated = d1.net.backward(loss.grad);
    g.net.backward(grad_generated);
    g.optimizer.step(g.net.parameters());
  }
  notify(Step::g_on_d1, false, epoch);

  // (5) D2 on the real batch.
  notify(Step::d2_real, true, epoch);
  losses.d2_real = reconstruction_step(d2, real_batch, Step::d2_real, epoch).value;
  notify(Step::d2_real, false, epoch);

  // (6) D2 on the generated batch once warm-up is over.
  if (train_d2_on_generated) {
    notify(Step::d2_generated, true, epoch);
    losses.d2_generated = reconstruction_step(d2, generated, Step::d2_generated, epoch).value;
    notify(Step::d2_generated, false, epoch);
  } else {
    const Matrix recon = d2.net.forward(generated, Mode::eval);
    losses.d2_generated = checked(nn::mse_loss(generated, recon).value, Step::d2_generated, epoch);
  }

  // (7) G against D2 with the shared reconstruction loss ||x - D2(x)||^2,
  // x = G(z). D2 runs frozen; the gradient reaches x directly and through D2.
  notify(Step::g_on_d2, true, epoch);
  {
    const Matrix x = checked(g.net.forward(z, Mode::train), Step::g_on_d2, epoch);
    const Matrix recon = d2.net.forward(x, Mode::frozen);
    auto loss = nn::mse_loss(x, recon);
    losses.g_d2 = checked(loss.value, Step::g_on_d2, epoch);
    Matrix grad_x = d2.net.backward(loss.grad);
    add_into(grad_x, negated(loss.grad));
    g.net.backward(grad_x);
    g.optimizer.step(g.net.parameters());
  }
  notify(Step::g_on_d2, false, epoch);

  ++iteration_;
  return losses;
}

TrainResult train_mdgan(const data::DatasetSplit& data, const TrainConfig& config, const TrainHooks& hooks) {
  require_trainable(data, config);
  MdganTrainer trainer(data.feature_dim(), config, hooks);
  Rng batch_rng = make_rng(derive_seed(config.seed, "batching"));

  TrainResult result{trainer.models().d2.net, {}, {}, 0};
  bool have_checkpoint = false;
  std::size_t global_iteration = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochAccumulator acc;
    for (const auto& idx : epoch_batches(data.train.rows(), config.batch_size, batch_rng)) {
      const std::size_t clock = config.warm_up_unit == WarmUpUnit::epochs ? epoch : global_iteration;
      const bool train_on_generated = clock >= config.warm_up;
      const auto losses = trainer.iteration(select_rows(data.train, idx), train_on_generated, epoch);
      acc.add(losses);
      if (train_on_generated) ++result.d2_generated_updates;
      ++global_iteration;
    }
    const double n = static_cast<double>(acc.count);
    auto& d2 = trainer.models().d2.net;
    const double score = validation_score(d2, data.validation);
    if (!std::isfinite(score)) throw DivergenceError("validation score", epoch, score);
    result.trace.push_back(LossRecord{epoch, acc.d1_real / n, acc.d1_generated / n, acc.g_d1 / n,
                                      acc.d2_real / n, acc.d2_generated / n, acc.g_d2 / n, score});
    update_checkpoint(result, d2, epoch, score, have_checkpoint);
  }
  return result;
}

TrainResult train_baseline(const data::DatasetSplit& data, const TrainConfig& config) {
  require_trainable(data, config);
  Network ae = build_autoencoder(data.feature_dim(), config);
  Rng batch_rng = make_rng(derive_seed(config.seed, "batching"));

  TrainResult result{ae.net, {}, {}, 0};
  bool have_checkpoint = false;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t count = 0;
    for (const auto& idx : epoch_batches(data.train.rows(), config.batch_size, batch_rng)) {
      loss_sum += reconstruction_step(ae, select_rows(data.train, idx), Step::d2_real, epoch).value;
      ++count;
    }
    const double score = validation_score(ae.net, data.validation);
    if (!std::isfinite(score)) throw DivergenceError("validation score", epoch, score);
    LossRecord rec;
    rec.epoch = epoch;
    rec.d2_real = loss_sum / static_cast<double>(count);
    rec.validation_score = score;
    result.trace.push_back(rec);
    update_checkpoint(result, ae.net, epoch, score, have_checkpoint);
  }
  return result;
}

}  // namespace mdgan::training
