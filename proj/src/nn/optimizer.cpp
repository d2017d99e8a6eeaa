#include "mdgan/nn/optimizer.hpp"

#include <cmath>

#include "mdgan/error.hpp"

namespace mdgan::nn {

Optimizer::Optimizer(OptimizerSettings settings) : settings_(settings) {
  const double lr = std::visit([](const auto& s) { return s.learning_rate; }, settings_);
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
  if (const auto* adam = std::get_if<AdamSettings>(&settings_)) {
    if (!(adam->beta1 >= 0.0 && adam->beta1 < 1.0) || !(adam->beta2 >= 0.0 && adam->beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(adam->epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  }
}

void Optimizer::step(const std::vector<Parameter>& params) {
  std::vector<Matrix*> values;
  std::vector<const Matrix*> grads;
  values.reserve(params.size());
  grads.reserve(params.size());
  for (const auto& p : params) {
    values.push_back(p.value);
    grads.push_back(p.grad);
  }
  step(values, grads);
}

void Optimizer::step(std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
  if (params.size() != grads.size()) throw ConfigError("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], *grads[i], "optimizer step");
  }

  if (const auto* sgd = std::get_if<SgdSettings>(&settings_)) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->values();
      const auto g = grads[i]->values();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= sgd->learning_rate * g[k];
    }
    ++steps_;
    return;
  }

  const auto& adam = std::get<AdamSettings>(settings_);
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  } else if (m_.size() != params.size()) {
    throw ConfigError("optimizer: parameter set changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], m_[i], "adam moments");
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(adam.beta1, t);
  const double correction2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    const auto g = grads[i]->values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = adam.beta1 * m[k] + (1.0 - adam.beta1) * g[k];
      v[k] = adam.beta2 * v[k] + (1.0 - adam.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= adam.learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
    }
  }
}

}  // namespace mdgan::nn
