// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/loss.hpp"

#include "vipnerf/error.hpp"

namespace vipnerf {

namespace {

void require_same(const char* what, const ad::Tensor& a, const ad::Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + ad::to_string(a.shape()) + " vs " + ad::to_string(b.shape()));
  }
}

}  // namespace

ad::Tensor loss_mse(const ad::Tensor& rendered, const ad::Tensor& target) {
  require_same("loss_mse", rendered, target);
  return ad::scale(ad::sum(ad::square(rendered - target)), 1.0 / static_cast<double>(rendered.rows()));
}

ad::Tensor loss_vip(const ad::Tensor& pixel_visibility, const ad::Tensor& prior) {
  require_same("loss_vip", pixel_visibility, prior);
  return ad::mean(ad::maximum(prior - pixel_visibility, 0.0));
}

ad::Tensor loss_vis_consistency(const ad::Tensor& transmittance, const ad::Tensor& predicted) {
  require_same("loss_vis_consistency", transmittance, predicted);
  const ad::Tensor to_head = ad::square(ad::stop_gradient(transmittance) - predicted);
  const ad::Tensor to_density = ad::square(transmittance - ad::stop_gradient(predicted));
  return ad::scale(ad::sum(to_head + to_density), 1.0 / static_cast<double>(transmittance.rows()));
}

ad::Tensor loss_sparse_depth(const ad::Tensor& rendered_depth, const ad::Tensor& target_depth) {
  require_same("loss_sparse_depth", rendered_depth, target_depth);
  return ad::mean(ad::square(rendered_depth - target_depth));
}

bool vip_active(const LossWeights& weights, std::int64_t iteration) {
  return iteration >= weights.vip_start_iteration;
}

ad::Tensor total_loss(const LossComponents& c, const LossWeights& weights, std::int64_t iteration) {
  if (iteration < 0) throw UsageError("total_loss: negative iteration");
  ad::Tensor total = ad::Tensor::scalar(0.0);
  const auto add_term = [&total](const ad::Tensor& term, double weight) {
    if (term.defined() && weight != 0.0) total = total + ad::scale(term, weight);
  };
  add_term(c.mse, weights.mse);
  add_term(c.sparse_depth, weights.sparse_depth);
  if (vip_active(weights, iteration)) add_term(c.vip, weights.vip);
  add_term(c.visibility, weights.visibility);
  return total;
}

}  // namespace vipnerf
