// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/optim.hpp"

#include <cmath>

#include "vipnerf/error.hpp"

namespace vipnerf {

double scheduled_learning_rate(const AdamConfig& config, std::int64_t step) {
  if (config.decay_steps <= 0) return config.lr_init;
  const double progress = static_cast<double>(step) / static_cast<double>(config.decay_steps);
  return config.lr_init * std::pow(config.lr_final / config.lr_init, progress);
}

Adam::Adam(AdamConfig config, std::vector<NamedParameter> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.lr_init > 0.0) || !(config_.lr_final > 0.0)) {
    throw UsageError("adam: learning rates must be positive");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  const double lr = scheduled_learning_rate(config_, step_);
  ++step_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (size_t k = 0; k < params_.size(); ++k) {
    ad::Tensor& t = params_[k].tensor;
    if (!t.has_grad()) continue;
    const auto g = t.grad();
    auto w = t.mutable_values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void Adam::restore(std::int64_t step, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw DataError("adam: moment count does not match parameter count");
  }
  for (size_t k = 0; k < params_.size(); ++k) {
    if (m[k].size() != params_[k].tensor.numel() || v[k].size() != params_[k].tensor.numel()) {
      throw DataError("adam: moment shape mismatch for '" + params_[k].name + "'");
    }
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace vipnerf
