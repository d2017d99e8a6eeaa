#include "mdgan/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "mdgan/error.hpp"

namespace mdgan::nn {

LossResult bce_loss(const Matrix& predictions, const Matrix& targets) {
  require_same_shape(predictions, targets, "bce_loss");
  if (predictions.empty()) throw ConfigError("bce_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(predictions.size());
  LossResult result{0.0, Matrix(predictions.rows(), predictions.cols())};
  const auto p = predictions.values();
  const auto t = targets.values();
  auto g = result.grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    result.value -= t[i] * std::log(q) + (1.0 - t[i]) * std::log(1.0 - q);
    g[i] = (q - t[i]) / (q * (1.0 - q)) * inv_n;
  }
  result.value *= inv_n;
  return result;
}

LossResult mse_loss(const Matrix& x, const Matrix& x_prime) {
  require_same_shape(x, x_prime, "mse_loss");
  if (x.empty()) throw ConfigError("mse_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(x.size());
  LossResult result{0.0, Matrix(x.rows(), x.cols())};
  const auto a = x.values();
  const auto b = x_prime.values();
  auto g = result.grad.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = b[i] - a[i];
    result.value += diff * diff;
    g[i] = 2.0 * diff * inv_n;
  }
  result.value *= inv_n;
  return result;
}

}  // namespace mdgan::nn
