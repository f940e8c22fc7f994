// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "vipnerf/tensor.hpp"

namespace vipnerf {

struct LossWeights {
  double mse = 1.0;
  double sparse_depth = 0.1;
  double vip = 0.001;
  double visibility = 0.1;
  std::int64_t vip_start_iteration = 0;
};

struct SparseDepthSample {
  int x = 0;
  int y = 0;
  double depth = 0.0;
};

/// Mean over rays of the squared colour distance. (R, 3) each.
ad::Tensor loss_mse(const ad::Tensor& rendered, const ad::Tensor& target);

/// Mean over pixels of max(tau - t, 0). (R, 1) each, tau in {0, 1}.
ad::Tensor loss_vip(const ad::Tensor& pixel_visibility, const ad::Tensor& prior);

/// sum_i (SG(T_i) - T^_i)^2 + (T_i - SG(T^_i))^2, summed over samples and
/// averaged over rays. (R, N) each.
ad::Tensor loss_vis_consistency(const ad::Tensor& transmittance, const ad::Tensor& predicted);

/// Mean squared depth error. (S, 1) each.
ad::Tensor loss_sparse_depth(const ad::Tensor& rendered_depth, const ad::Tensor& target_depth);

/// Undefined tensors stand for inactive terms.
struct LossComponents {
  ad::Tensor mse;
  ad::Tensor sparse_depth;
  ad::Tensor vip;
  ad::Tensor visibility;
};

/// Weighted sum; the vip term only counts once iteration >= vip_start_iteration.
ad::Tensor total_loss(const LossComponents& components, const LossWeights& weights, std::int64_t iteration);

bool vip_active(const LossWeights& weights, std::int64_t iteration);

}  // namespace vipnerf
