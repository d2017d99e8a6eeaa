#include "mdgan/nn/layers.hpp"

#include <cmath>

#include "mdgan/error.hpp"

namespace mdgan::nn {
namespace {

void require_input_width(const Matrix& input, std::size_t expected, const char* layer) {
  if (input.cols() != expected) {
    throw ConfigError(std::string(layer) + " expects " + std::to_string(expected) +
                      " input columns, got " + std::to_string(input.cols()));
  }
}

[[noreturn]] void no_cache(const char* layer) {
  throw StateError(std::string(layer) + ": backward called without a preceding train-mode forward");
}

bool caches(Mode mode) { return mode != Mode::eval; }

}  // namespace

// ---------------------------------------------------------------------------
// Affine

AffineLayer::AffineLayer(std::size_t in_dim, std::size_t out_dim)
    : weights_(in_dim, out_dim),
      bias_(1, out_dim),
      weights_grad_(in_dim, out_dim),
      bias_grad_(1, out_dim) {
  if (in_dim == 0 || out_dim == 0) throw ConfigError("affine layer dimensions must be >= 1");
}

Matrix AffineLayer::forward(const Matrix& input, Mode mode, Rng&) {
  require_input_width(input, in_dim(), "affine layer");
  Matrix out = matmul(input, weights_);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] += bias_(0, c);
  }
  if (caches(mode)) cached_input_ = input;
  return out;
}

Matrix AffineLayer::backward(const Matrix& output_grad) {
  if (!cached_input_) no_cache("affine layer");
  const Matrix& input = *cached_input_;
  if (output_grad.rows() != input.rows() || output_grad.cols() != out_dim()) {
    throw ConfigError("affine backward: gradient shape " + output_grad.shape_string());
  }
  weights_grad_ = matmul_tn(input, output_grad);
  bias_grad_.fill(0.0);
  for (std::size_t r = 0; r < output_grad.rows(); ++r) {
    for (std::size_t c = 0; c < output_grad.cols(); ++c) bias_grad_(0, c) += output_grad(r, c);
  }
  Matrix input_grad = matmul_nt(output_grad, weights_);
  cached_input_.reset();
  return input_grad;
}

void AffineLayer::collect(std::vector<Parameter>& params, const std::string& prefix) {
  params.push_back({prefix + "weights", &weights_, &weights_grad_});
  params.push_back({prefix + "bias", &bias_, &bias_grad_});
}

// ---------------------------------------------------------------------------
// Activation

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::relu: return "relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation::Activation(ActivationKind kind, double alpha) : kind_(kind), alpha_(alpha) {}

double Activation::apply(double x) const noexcept {
  switch (kind_) {
    case ActivationKind::leaky_relu: return x >= 0.0 ? x : alpha_ * x;
    case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    case ActivationKind::tanh: return std::tanh(x);
    case ActivationKind::sigmoid:
      // split form avoids overflow of exp for large |x|
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
  }
  return x;
}

Matrix Activation::forward(const Matrix& input, Mode mode, Rng&) {
  Matrix out(input.rows(), input.cols());
  const auto in = input.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = apply(in[i]);
  if (caches(mode)) {
    cached_input_ = input;
    cached_output_ = out;
  }
  return out;
}

Matrix Activation::backward(const Matrix& output_grad) {
  if (!cached_input_) no_cache("activation");
  require_same_shape(output_grad, *cached_input_, "activation backward");
  Matrix grad(output_grad.rows(), output_grad.cols());
  const auto x = cached_input_->values();
  const auto y = cached_output_->values();
  const auto g = output_grad.values();
  auto out = grad.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double d = 1.0;
    switch (kind_) {
      case ActivationKind::leaky_relu: d = x[i] >= 0.0 ? 1.0 : alpha_; break;
      case ActivationKind::relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
      case ActivationKind::tanh: d = 1.0 - y[i] * y[i]; break;
      case ActivationKind::sigmoid: d = y[i] * (1.0 - y[i]); break;
    }
    out[i] = g[i] * d;
  }
  cached_input_.reset();
  cached_output_.reset();
  return grad;
}

// ---------------------------------------------------------------------------
// Dropout

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

Matrix DropoutLayer::forward(const Matrix& input, Mode mode, Rng& rng) {
  if (mode == Mode::eval) return input;
  Matrix mask(input.rows(), input.cols(), 1.0);
  if (rate_ > 0.0) {
    const double scale = 1.0 / (1.0 - rate_);
    std::bernoulli_distribution keep(1.0 - rate_);
    for (double& m : mask.values()) m = keep(rng) ? scale : 0.0;
  }
  Matrix out = input;
  auto o = out.values();
  const auto mk = mask.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= mk[i];
  mask_ = std::move(mask);
  return out;
}

Matrix DropoutLayer::backward(const Matrix& output_grad) {
  if (!mask_) no_cache("dropout layer");
  require_same_shape(output_grad, *mask_, "dropout backward");
  Matrix grad = output_grad;
  auto g = grad.values();
  const auto mk = mask_->values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mk[i];
  mask_.reset();
  return grad;
}

// ---------------------------------------------------------------------------
// Batch normalization

BatchNormLayer::BatchNormLayer(std::size_t dim, double momentum, double epsilon)
    : gamma_(1, dim, 1.0),
      beta_(1, dim, 0.0),
      gamma_grad_(1, dim),
      beta_grad_(1, dim),
      running_mean_(1, dim, 0.0),
      running_var_(1, dim, 1.0),
      momentum_(momentum),
      epsilon_(epsilon) {
  if (dim == 0) throw ConfigError("batch-norm dimension must be >= 1");
  if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batch-norm momentum must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("batch-norm epsilon must be positive");
}

Matrix BatchNormLayer::forward(const Matrix& input, Mode mode, Rng&) {
  require_input_width(input, dim(), "batch-norm layer");
  const std::size_t n = input.rows();
  const std::size_t d = dim();
  Matrix out(n, d);

  if (mode == Mode::eval) {
    for (std::size_t c = 0; c < d; ++c) {
      const double inv_std = 1.0 / std::sqrt(running_var_(0, c) + epsilon_);
      for (std::size_t r = 0; r < n; ++r) {
        out(r, c) = gamma_(0, c) * (input(r, c) - running_mean_(0, c)) * inv_std + beta_(0, c);
      }
    }
    return out;
  }

  if (n < 2) throw ConfigError("batch-norm in train mode needs a batch of at least 2 rows");
  Cache cache{Matrix(n, d), std::vector<double>(d)};
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += input(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dev = input(r, c) - mean;
      var += dev * dev;
    }
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + epsilon_);
    cache.inv_std[c] = inv_std;
    for (std::size_t r = 0; r < n; ++r) {
      const double xhat = (input(r, c) - mean) * inv_std;
      cache.normalized(r, c) = xhat;
      out(r, c) = gamma_(0, c) * xhat + beta_(0, c);
    }
    if (mode == Mode::train) {
      running_mean_(0, c) = momentum_ * running_mean_(0, c) + (1.0 - momentum_) * mean;
      running_var_(0, c) = momentum_ * running_var_(0, c) + (1.0 - momentum_) * var;
    }
  }
  cache_ = std::move(cache);
  return out;
}

Matrix BatchNormLayer::backward(const Matrix& output_grad) {
  if (!cache_) no_cache("batch-norm layer");
  const Matrix& xhat = cache_->normalized;
  require_same_shape(output_grad, xhat, "batch-norm backward");
  const std::size_t n = xhat.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix input_grad(n, dim());
  for (std::size_t c = 0; c < dim(); ++c) {
    double sum_g = 0.0;
    double sum_g_xhat = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      sum_g += output_grad(r, c);
      sum_g_xhat += output_grad(r, c) * xhat(r, c);
    }
    gamma_grad_(0, c) = sum_g_xhat;
    beta_grad_(0, c) = sum_g;
    const double scale = gamma_(0, c) * cache_->inv_std[c] * inv_n;
    for (std::size_t r = 0; r < n; ++r) {
      input_grad(r, c) =
          scale * (static_cast<double>(n) * output_grad(r, c) - sum_g - xhat(r, c) * sum_g_xhat);
    }
  }
  cache_.reset();
  return input_grad;
}

const Matrix& BatchNormLayer::normalized() const {
  if (!cache_) throw StateError("batch-norm layer has no cached normalized batch");
  return cache_->normalized;
}

void BatchNormLayer::collect(std::vector<Parameter>& params, const std::string& prefix) {
  params.push_back({prefix + "gamma", &gamma_, &gamma_grad_});
  params.push_back({prefix + "beta", &beta_, &beta_grad_});
}

void BatchNormLayer::collect(std::vector<Buffer>& buffers, const std::string& prefix) {
  buffers.push_back({prefix + "running_mean", &running_mean_});
  buffers.push_back({prefix + "running_var", &running_var_});
}

}  // namespace mdgan::nn
