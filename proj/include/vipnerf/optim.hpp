// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vipnerf/tensor.hpp"

namespace vipnerf {

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

struct AdamConfig {
  double lr_init = 5e-4;
  double lr_final = 5e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t decay_steps = 50000;
};

/// Learning rate after `step` updates: exponential interpolation from
/// lr_init at step 0 to lr_final at step decay_steps.
double scheduled_learning_rate(const AdamConfig& config, std::int64_t step);

/// Adam with bias correction and an exponentially decaying learning rate.
class Adam {
 public:
  Adam(AdamConfig config, std::vector<NamedParameter> params);

  /// Applies one update from the accumulated gradients. Throws NumericError
  /// naming the parameter if any gradient is non-finite; no parameter is
  /// modified in that case.
  void step();

  void zero_grad();

  double current_learning_rate() const { return scheduled_learning_rate(config_, step_); }
  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }

  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(std::int64_t step, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

 private:
  AdamConfig config_;
  std::vector<NamedParameter> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_ = 0;
};

}  // namespace vipnerf
