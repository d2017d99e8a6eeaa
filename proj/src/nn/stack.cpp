#include "mdgan/nn/stack.hpp"

#include "mdgan/error.hpp"

namespace mdgan::nn {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string layer_prefix(std::size_t index) { return "layer" + std::to_string(index) + "."; }

}  // namespace

LayerStack::LayerStack(std::size_t input_dim, std::uint64_t dropout_seed)
    : input_dim_(input_dim), output_dim_(input_dim), dropout_rng_(dropout_seed) {
  if (input_dim == 0) throw ConfigError("layer stack input dimension must be >= 1");
}

LayerStack& LayerStack::add(Layer layer) {
  std::visit(overloaded{
                 [&](const AffineLayer& l) {
                   if (l.in_dim() != output_dim_) {
                     throw ConfigError("affine layer expects width " + std::to_string(l.in_dim()) +
                                       " but stack produces " + std::to_string(output_dim_));
                   }
                   output_dim_ = l.out_dim();
                 },
                 [&](const BatchNormLayer& l) {
                   if (l.dim() != output_dim_) {
                     throw ConfigError("batch-norm layer width " + std::to_string(l.dim()) +
                                       " does not match stack width " + std::to_string(output_dim_));
                   }
                 },
                 [](const auto&) {},
             },
             layer);
  layers_.push_back(std::move(layer));
  return *this;
}

Matrix LayerStack::forward(const Matrix& input, Mode mode) {
  if (input.cols() != input_dim_) {
    throw ConfigError("network expects " + std::to_string(input_dim_) + " input columns, got " +
                      std::to_string(input.cols()));
  }
  if (!input.all_finite()) throw ConfigError("network input contains non-finite values");
  Matrix x = input;
  for (auto& layer : layers_) {
    x = std::visit([&](auto& l) { return l.forward(x, mode, dropout_rng_); }, layer);
  }
  if (mode != Mode::eval) has_forward_cache_ = true;
  return x;
}

Matrix LayerStack::backward(const Matrix& output_grad) {
  if (!has_forward_cache_) {
    throw StateError("backward called without a preceding train-mode forward");
  }
  if (output_grad.cols() != output_dim_) {
    throw ConfigError("output gradient has " + std::to_string(output_grad.cols()) +
                      " columns, network produces " + std::to_string(output_dim_));
  }
  Matrix g = output_grad;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = std::visit([&](auto& l) { return l.backward(g); }, *it);
  }
  has_forward_cache_ = false;
  return g;
}

std::vector<Parameter> LayerStack::parameters() {
  std::vector<Parameter> params;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit([&](auto& l) { l.collect(params, layer_prefix(i)); }, layers_[i]);
  }
  return params;
}

std::vector<Buffer> LayerStack::buffers() {
  std::vector<Buffer> bufs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit([&](auto& l) { l.collect(bufs, layer_prefix(i)); }, layers_[i]);
  }
  return bufs;
}

std::vector<LayerStack::TensorView> LayerStack::tensors() const {
  // collect() hands out mutable pointers; they are only read here.
  auto& self = const_cast<LayerStack&>(*this);
  std::vector<TensorView> out;
  for (const auto& p : self.parameters()) out.push_back({p.name, p.value, false});
  for (const auto& b : self.buffers()) out.push_back({b.name, b.value, true});
  return out;
}

std::vector<Matrix> LayerStack::snapshot() const {
  std::vector<Matrix> out;
  for (const auto& t : tensors()) out.push_back(*t.value);
  return out;
}

std::vector<std::size_t> LayerStack::widths() const {
  std::vector<std::size_t> w{input_dim_};
  for (const auto& layer : layers_) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) w.push_back(a->out_dim());
  }
  return w;
}

std::size_t LayerStack::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) {
    if (!t.is_buffer) n += t.value->size();
  }
  return n;
}

}  // namespace mdgan::nn
