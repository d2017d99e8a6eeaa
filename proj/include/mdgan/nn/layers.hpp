#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mdgan/matrix.hpp"
#include "mdgan/rng.hpp"

namespace mdgan::nn {

/// Forward-pass mode.
///  - train:  batch statistics, dropout active, running stats updated, caches kept.
///  - frozen: same arithmetic as train (so gradients can flow through), but no
///            buffer is written. Used when another network is optimized through
///            this one.
///  - eval:   running statistics, dropout is the identity, no caches.
enum class Mode { train, frozen, eval };

/// Non-owning handle to a trainable tensor and its gradient.
struct Parameter {
  std::string name;
  Matrix* value;
  Matrix* grad;
};

/// Non-trainable state that still defines the network (batch-norm running stats).
struct Buffer {
  std::string name;
  Matrix* value;
};

class AffineLayer {
 public:
  AffineLayer(std::size_t in_dim, std::size_t out_dim);

  Matrix forward(const Matrix& input, Mode mode, Rng& rng);
  Matrix backward(const Matrix& output_grad);

  std::size_t in_dim() const noexcept { return weights_.rows(); }
  std::size_t out_dim() const noexcept { return weights_.cols(); }
  bool has_cache() const noexcept { return cached_input_.has_value(); }

  Matrix& weights() noexcept { return weights_; }
  const Matrix& weights() const noexcept { return weights_; }
  Matrix& bias() noexcept { return bias_; }
  const Matrix& bias() const noexcept { return bias_; }
  const Matrix& weights_grad() const noexcept { return weights_grad_; }
  const Matrix& bias_grad() const noexcept { return bias_grad_; }

  void collect(std::vector<Parameter>& params, const std::string& prefix);
  void collect(std::vector<Buffer>&, const std::string&) {}

 private:
  Matrix weights_;  // in_dim x out_dim
  Matrix bias_;     // 1 x out_dim
  Matrix weights_grad_;
  Matrix bias_grad_;
  std::optional<Matrix> cached_input_;
};

enum class ActivationKind { leaky_relu, relu, tanh, sigmoid };

std::string to_string(ActivationKind kind);

class Activation {
 public:
  explicit Activation(ActivationKind kind, double alpha = 0.2);

  static Activation leaky_relu(double alpha = 0.2) { return Activation(ActivationKind::leaky_relu, alpha); }
  static Activation relu() { return Activation(ActivationKind::relu); }
  static Activation tanh() { return Activation(ActivationKind::tanh); }
  static Activation sigmoid() { return Activation(ActivationKind::sigmoid); }

  Matrix forward(const Matrix& input, Mode mode, Rng& rng);
  Matrix backward(const Matrix& output_grad);

  double apply(double x) const noexcept;
  ActivationKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  bool has_cache() const noexcept { return cached_input_.has_value(); }

  void collect(std::vector<Parameter>&, const std::string&) {}
  void collect(std::vector<Buffer>&, const std::string&) {}

 private:
  ActivationKind kind_;
  double alpha_;
  std::optional<Matrix> cached_input_;
  std::optional<Matrix> cached_output_;
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) in train mode.
class DropoutLayer {
 public:
  explicit DropoutLayer(double rate);

  Matrix forward(const Matrix& input, Mode mode, Rng& rng);
  Matrix backward(const Matrix& output_grad);

  double rate() const noexcept { return rate_; }
  bool has_cache() const noexcept { return mask_.has_value(); }
  const std::optional<Matrix>& mask() const noexcept { return mask_; }

  void collect(std::vector<Parameter>&, const std::string&) {}
  void collect(std::vector<Buffer>&, const std::string&) {}

 private:
  double rate_;
  std::optional<Matrix> mask_;  // already holds the 1/(1-rate) scale
};

class BatchNormLayer {
 public:
  explicit BatchNormLayer(std::size_t dim, double momentum = 0.9, double epsilon = 1e-5);

  Matrix forward(const Matrix& input, Mode mode, Rng& rng);
  Matrix backward(const Matrix& output_grad);

  std::size_t dim() const noexcept { return gamma_.cols(); }
  double momentum() const noexcept { return momentum_; }
  double epsilon() const noexcept { return epsilon_; }
  bool has_cache() const noexcept { return cache_.has_value(); }

  Matrix& gamma() noexcept { return gamma_; }
  Matrix& beta() noexcept { return beta_; }
  const Matrix& running_mean() const noexcept { return running_mean_; }
  const Matrix& running_var() const noexcept { return running_var_; }

  /// Normalized activations (before gamma/beta) from the last train/frozen pass.
  const Matrix& normalized() const;

  void collect(std::vector<Parameter>& params, const std::string& prefix);
  void collect(std::vector<Buffer>& buffers, const std::string& prefix);

 private:
  struct Cache {
    Matrix normalized;
    std::vector<double> inv_std;
  };

  Matrix gamma_, beta_;
  Matrix gamma_grad_, beta_grad_;
  Matrix running_mean_, running_var_;
  double momentum_;
  double epsilon_;
  std::optional<Cache> cache_;
};

using Layer = std::variant<AffineLayer, Activation, DropoutLayer, BatchNormLayer>;

}  // namespace mdgan::nn
