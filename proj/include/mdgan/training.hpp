#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdgan/data.hpp"
#include "mdgan/matrix.hpp"
#include "mdgan/models.hpp"
#include "mdgan/nn/optimizer.hpp"
#include "mdgan/nn/stack.hpp"
#include "mdgan/rng.hpp"

namespace mdgan::training {

/// How G is trained against D1.
///  - non_saturating: minimize -log D1(G(z))
///  - saturating:     minimize  log(1 - D1(G(z)))
enum class GLossMode { non_saturating, saturating };
enum class WarmUpUnit { epochs, iterations };

GLossMode parse_g_loss_mode(const std::string& name);
std::string to_string(GLossMode mode);
WarmUpUnit parse_warm_up_unit(const std::string& name);
std::string to_string(WarmUpUnit unit);

/// Width overrides for G and D1. Unset fields fall back to the defaults in models.hpp.
struct ModelOverrides {
  std::optional<std::size_t> latent_dim;
  std::optional<std::vector<std::size_t>> g_hidden;
  std::optional<std::vector<std::size_t>> d1_hidden;
  bool g_batch_norm = true;
  double g_dropout = 0.10;
  double d1_dropout = 0.10;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::size_t warm_up = 0;
  WarmUpUnit warm_up_unit = WarmUpUnit::epochs;
  std::uint64_t seed = 0;
  GLossMode g_loss_mode = GLossMode::non_saturating;
  nn::OptimizerSettings g_optimizer = nn::AdamSettings{};
  nn::OptimizerSettings d1_optimizer = nn::SgdSettings{};
  nn::OptimizerSettings d2_optimizer = nn::AdamSettings{};
  ModelOverrides model;

  /// Throws ConfigError for epochs == 0 or batch_size < 2.
  void validate() const;
};

struct Network {
  nn::LayerStack net;
  nn::Optimizer optimizer;
};

struct ModelTriple {
  Network g;
  Network d1;
  Network d2;
  std::size_t latent_dim;
};

/// Builds G, D1, D2 for `feature_dim` from per-network substreams of `seed`.
ModelTriple build_triple(std::size_t feature_dim, const TrainConfig& config);

/// Autoencoder with D2's architecture and initialization for the same seed.
Network build_autoencoder(std::size_t feature_dim, const TrainConfig& config);

enum class Step { d1_real, d1_generated, g_on_d1, d2_real, d2_generated, g_on_d2 };
std::string to_string(Step step);

struct StepEvent {
  Step step;
  bool before;  // true: about to run; false: just finished
  std::size_t epoch;
  std::size_t iteration;  // global, 0-based
};

struct TrainHooks {
  std::function<void(const StepEvent&, const ModelTriple&)> on_step;
};

/// Per-epoch means of the losses computed in that epoch. Baseline runs only
/// fill d2_real. d2_generated is measured (without an update) during warm-up.
struct LossRecord {
  std::size_t epoch = 0;
  std::optional<double> d1_real;
  std::optional<double> d1_generated;
  std::optional<double> g_d1;
  std::optional<double> d2_real;
  std::optional<double> d2_generated;
  std::optional<double> g_d2;
  double validation_score = 0.0;
};

using LossTrace = std::vector<LossRecord>;

/// Long-format CSV: header "epoch,loss_name,value", one line per logged loss.
std::string trace_to_csv(const LossTrace& trace);

struct Checkpoint {
  std::size_t epoch = 0;
  double validation_score = 0.0;
};

struct TrainResult {
  nn::LayerStack best_model;  // D2 (or the baseline autoencoder) at the checkpoint epoch
  Checkpoint checkpoint;
  LossTrace trace;
  std::uint64_t d2_generated_updates = 0;
};

/// i.i.d. N(0, 1) matrix of shape (batch, latent_dim).
Matrix sample_noise(std::size_t batch, std::size_t latent_dim, Rng& rng);

/// Negative mean RMSE of `validation` reconstructions (higher is better; 0 is perfect).
double validation_score(nn::LayerStack& model, const Matrix& validation);

/// Shuffled mini-batch index lists for one epoch: ceil(n / batch_size)
/// batches, a trailing batch of one sample dropped.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng);

struct IterationLosses {
  double d1_real;
  double d1_generated;
  double g_d1;
  double d2_real;
  double d2_generated;  // measured only when not trained
  double g_d2;
};

/// One MDGAN iteration at a time. train_mdgan() drives this over epochs.
class MdganTrainer {
 public:
  MdganTrainer(std::size_t feature_dim, const TrainConfig& config, TrainHooks hooks = {});

  /// Runs the seven steps on `real_batch`. D2 trains on the generated batch
  /// only when `train_d2_on_generated` is set.
  IterationLosses iteration(const Matrix& real_batch, bool train_d2_on_generated, std::size_t epoch);

  ModelTriple& models() noexcept { return models_; }
  const ModelTriple& models() const noexcept { return models_; }
  std::size_t iterations_run() const noexcept { return iteration_; }

 private:
  void notify(Step step, bool before, std::size_t epoch) const;

  TrainConfig config_;
  TrainHooks hooks_;
  ModelTriple models_;
  Rng noise_rng_;
  std::size_t iteration_ = 0;
};

/// MDGAN training loop. Returns the D2 snapshot from the epoch with the best
/// validation score. Throws DivergenceError on a non-finite loss.
TrainResult train_mdgan(const data::DatasetSplit& data, const TrainConfig& config, const TrainHooks& hooks = {});

/// Autoencoder trained on real batches only, with D2's architecture, seed
/// streams, batching, and checkpoint rule.
TrainResult train_baseline(const data::DatasetSplit& data, const TrainConfig& config);

}  // namespace mdgan::training
