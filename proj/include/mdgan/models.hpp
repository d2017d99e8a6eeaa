#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mdgan/nn/stack.hpp"

namespace mdgan::models {

/// Rounds num/den to the nearest integer, ties to even, floored at 1.
std::size_t scaled_width(std::size_t dim, std::size_t num, std::size_t den);

/// Generator: [affine -> leaky_relu(0.2) -> (batch-norm) -> dropout] x 3 -> affine -> tanh.
struct GeneratorSpec {
  std::size_t latent_dim = 0;
  std::vector<std::size_t> hidden_dims;  // three entries for the four-layer net
  std::size_t output_dim = 0;
  double dropout_rate = 0.10;
  bool batch_norm = true;
  double leaky_alpha = 0.2;

  /// latent = d, hidden = [2d, 2d, d].
  static GeneratorSpec defaults_for(std::size_t feature_dim);
};

/// Real/fake classifier: [affine -> leaky_relu(0.2) -> batch-norm -> dropout] x 3
/// -> affine(1) -> sigmoid.
struct D1Spec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  double dropout_rate = 0.10;
  double leaky_alpha = 0.2;

  /// hidden = [2d, d, ceil(d/2)].
  static D1Spec defaults_for(std::size_t feature_dim);
};

/// Autoencoder widths for feature dimension d: [d, r(0.7d), r(0.5d), r(0.7d), d].
std::vector<std::size_t> d2_widths(std::size_t input_dim);

nn::LayerStack build_generator(const GeneratorSpec& spec, std::uint64_t seed);
nn::LayerStack build_d1(const D1Spec& spec, std::uint64_t seed);

/// Four affine layers following d2_widths(): ReLU after each hidden layer, tanh output.
/// Throws ConfigError when input_dim < 2.
nn::LayerStack build_d2(std::size_t input_dim, std::uint64_t seed);

}  // namespace mdgan::models
