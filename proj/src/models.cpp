#include "mdgan/models.hpp"

#include <cmath>
#include <random>

#include "mdgan/error.hpp"

namespace mdgan::models {
namespace {

using nn::Activation;
using nn::AffineLayer;
using nn::BatchNormLayer;
using nn::DropoutLayer;
using nn::LayerStack;

enum class Init { he, xavier };

AffineLayer make_affine(std::size_t in, std::size_t out, Init init, Rng& rng) {
  AffineLayer layer(in, out);
  const double limit = init == Init::he ? std::sqrt(6.0 / static_cast<double>(in))
                                        : std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : layer.weights().values()) w = dist(rng);
  return layer;
}

void require_positive(const std::vector<std::size_t>& dims, const char* what) {
  for (auto d : dims) {
    if (d == 0) throw ConfigError(std::string(what) + ": every width must be >= 1");
  }
}

}  // namespace

std::size_t scaled_width(std::size_t dim, std::size_t num, std::size_t den) {
  const std::size_t scaled = dim * num;
  std::size_t q = scaled / den;
  const std::size_t twice_rem = 2 * (scaled % den);
  if (twice_rem > den || (twice_rem == den && q % 2 == 1)) ++q;
  return q == 0 ? 1 : q;
}

GeneratorSpec GeneratorSpec::defaults_for(std::size_t d) {
  GeneratorSpec spec;
  spec.latent_dim = d;
  spec.hidden_dims = {2 * d, 2 * d, d};
  spec.output_dim = d;
  return spec;
}

D1Spec D1Spec::defaults_for(std::size_t d) {
  D1Spec spec;
  spec.input_dim = d;
  spec.hidden_dims = {2 * d, d, (d + 1) / 2};
  return spec;
}

std::vector<std::size_t> d2_widths(std::size_t input_dim) {
  if (input_dim < 2) throw ConfigError("autoencoder input dimension must be >= 2");
  const std::size_t outer = scaled_width(input_dim, 7, 10);
  const std::size_t inner = scaled_width(input_dim, 5, 10);
  return {input_dim, outer, inner, outer, input_dim};
}

LayerStack build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  require_positive({spec.latent_dim, spec.output_dim}, "generator");
  require_positive(spec.hidden_dims, "generator");
  if (spec.hidden_dims.empty()) throw ConfigError("generator needs at least one hidden layer");

  Rng rng = make_rng(derive_seed(seed, "weights"));
  LayerStack stack(spec.latent_dim, derive_seed(seed, "dropout"));
  std::size_t width = spec.latent_dim;
  for (std::size_t hidden : spec.hidden_dims) {
    stack.add(make_affine(width, hidden, Init::he, rng));
    stack.add(Activation::leaky_relu(spec.leaky_alpha));
    if (spec.batch_norm) stack.add(BatchNormLayer(hidden));
    stack.add(DropoutLayer(spec.dropout_rate));
    width = hidden;
  }
  stack.add(make_affine(width, spec.output_dim, Init::xavier, rng));
  stack.add(Activation::tanh());
  return stack;
}

LayerStack build_d1(const D1Spec& spec, std::uint64_t seed) {
  require_positive({spec.input_dim}, "D1");
  require_positive(spec.hidden_dims, "D1");
  if (spec.hidden_dims.empty()) throw ConfigError("D1 needs at least one hidden layer");

  Rng rng = make_rng(derive_seed(seed, "weights"));
  LayerStack stack(spec.input_dim, derive_seed(seed, "dropout"));
  std::size_t width = spec.input_dim;
  for (std::size_t hidden : spec.hidden_dims) {
    stack.add(make_affine(width, hidden, Init::he, rng));
    stack.add(Activation::leaky_relu(spec.leaky_alpha));
    stack.add(BatchNormLayer(hidden));
    stack.add(DropoutLayer(spec.dropout_rate));
    width = hidden;
  }
  stack.add(make_affine(width, 1, Init::xavier, rng));
  stack.add(Activation::sigmoid());
  return stack;
}

LayerStack build_d2(std::size_t input_dim, std::uint64_t seed) {
  const auto widths = d2_widths(input_dim);
  Rng rng = make_rng(derive_seed(seed, "weights"));
  LayerStack stack(input_dim, derive_seed(seed, "dropout"));
  for (std::size_t i = 1; i < widths.size(); ++i) {
    const bool output = i + 1 == widths.size();
    stack.add(make_affine(widths[i - 1], widths[i], output ? Init::xavier : Init::he, rng));
    stack.add(output ? Activation::tanh() : Activation::relu());
  }
  return stack;
}

}  // namespace mdgan::models
