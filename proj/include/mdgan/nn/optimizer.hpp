#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mdgan/matrix.hpp"
#include "mdgan/nn/layers.hpp"

namespace mdgan::nn {

struct SgdSettings {
  double learning_rate = 0.01;
};

struct AdamSettings {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using OptimizerSettings = std::variant<SgdSettings, AdamSettings>;

/// Per-network optimizer. Adam moments are allocated on the first step and
/// keep the shapes of the parameters they track.
class Optimizer {
 public:
  explicit Optimizer(OptimizerSettings settings);

  /// Applies one update to every parameter using its stored gradient.
  void step(const std::vector<Parameter>& params);

  /// Same, with explicit tensors. `params` and `grads` are paired by index.
  void step(std::span<Matrix* const> params, std::span<const Matrix* const> grads);

  std::uint64_t steps() const noexcept { return steps_; }
  const OptimizerSettings& settings() const noexcept { return settings_; }
  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }

 private:
  OptimizerSettings settings_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace mdgan::nn
