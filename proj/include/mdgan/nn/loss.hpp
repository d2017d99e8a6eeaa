#pragma once

#include "mdgan/matrix.hpp"

namespace mdgan::nn {

/// Predictions are clamped into [kProbabilityFloor, 1 - kProbabilityFloor]
/// before the logarithm.
inline constexpr double kProbabilityFloor = 1e-7;

struct LossResult {
  double value;
  Matrix grad;  // d value / d (predictions | x_prime)
};

/// Mean binary cross-entropy over every element.
LossResult bce_loss(const Matrix& predictions, const Matrix& targets);

/// Mean of squared differences over batch and features; gradient is w.r.t. `x_prime`.
/// The gradient w.r.t. `x` is its negation.
LossResult mse_loss(const Matrix& x, const Matrix& x_prime);

}  // namespace mdgan::nn
