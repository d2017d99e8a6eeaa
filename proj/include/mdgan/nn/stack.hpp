#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdgan/matrix.hpp"
#include "mdgan/nn/layers.hpp"
#include "mdgan/rng.hpp"

namespace mdgan::nn {

/// Ordered sequence of layers with a private RNG for dropout masks.
///
/// Stacks are plain values: copying one copies parameters, optimizer-free
/// state (running stats, caches) and the dropout RNG position. Training code
/// relies on this for checkpoints.
class LayerStack {
 public:
  LayerStack(std::size_t input_dim, std::uint64_t dropout_seed);

  /// Appends a layer. Throws ConfigError if an affine/batch-norm layer does not
  /// accept the current output width.
  LayerStack& add(Layer layer);

  /// Input must have input_dim() columns and finite entries.
  Matrix forward(const Matrix& input, Mode mode);

  /// Propagates `output_grad` back through every layer, leaving each
  /// parameter's gradient in place, and returns the gradient w.r.t. the input.
  /// Throws StateError unless a train/frozen forward ran since the last backward.
  Matrix backward(const Matrix& output_grad);

  std::vector<Parameter> parameters();
  std::vector<Buffer> buffers();

  struct TensorView {
    std::string name;
    const Matrix* value;
    bool is_buffer;
  };
  /// Read-only view of parameters then buffers.
  std::vector<TensorView> tensors() const;

  /// Copies of every parameter followed by every buffer, in a fixed order.
  std::vector<Matrix> snapshot() const;

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::span<const Layer> layers() const noexcept { return layers_; }
  std::span<Layer> layers() noexcept { return layers_; }

  /// [input_dim, out_dim of each affine layer...]
  std::vector<std::size_t> widths() const;

  std::size_t parameter_count() const;

 private:
  std::size_t input_dim_;
  std::size_t output_dim_;
  std::vector<Layer> layers_;
  Rng dropout_rng_;
  bool has_forward_cache_ = false;
};

}  // namespace mdgan::nn
