// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/field.hpp"

#include <cmath>
#include <random>
#include <string>

#include "vipnerf/error.hpp"

namespace vipnerf {

PositionalEncoding::PositionalEncoding(int freqs, bool include_input) : freqs_(freqs), include_input_(include_input) {
  if (freqs < 0) throw UsageError("positional encoding: negative frequency count");
  if (freqs == 0 && !include_input) throw UsageError("positional encoding: empty encoding");
}

void PositionalEncoding::encode(const Vec3& v, std::span<double> out) const {
  size_t i = 0;
  if (include_input_) {
    for (int c = 0; c < 3; ++c) out[i++] = v[c];
  }
  for (int k = 0; k < freqs_; ++k) {
    const double f = std::ldexp(1.0, k);
    for (int c = 0; c < 3; ++c) out[i++] = std::sin(f * v[c]);
    for (int c = 0; c < 3; ++c) out[i++] = std::cos(f * v[c]);
  }
}

ad::Tensor PositionalEncoding::encode_batch(std::span<const Vec3> vectors) const {
  const size_t dim = output_dim();
  std::vector<double> data(vectors.size() * dim);
  for (size_t r = 0; r < vectors.size(); ++r) encode(vectors[r], std::span<double>(data).subspan(r * dim, dim));
  return ad::Tensor::from(std::move(data), vectors.size(), dim);
}

namespace {

ad::Tensor uniform_weight(size_t rows, size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(rows * cols);
  for (double& v : data) v = dist(rng);
  return ad::Tensor::from(std::move(data), rows, cols, true);
}

}  // namespace

RadianceField::RadianceField(FieldConfig config, std::uint64_t seed)
    : config_(config),
      pos_encoding_(config.pos_freqs, config.include_input),
      dir_encoding_(config.dir_freqs, config.include_input) {
  if (config.width <= 0 || config.depth <= 0) throw UsageError("field: width and depth must be positive");
  std::mt19937_64 rng(seed);
  const size_t w = config.width;
  size_t fan_in = pos_encoding_.output_dim();
  for (int layer = 0; layer < config.depth; ++layer) {
    const std::string prefix = "f1.layer" + std::to_string(layer);
    trunk_weights_.push_back(params_.size());
    params_.push_back({prefix + ".weight", uniform_weight(fan_in, w, std::sqrt(6.0 / fan_in), rng)});
    trunk_biases_.push_back(params_.size());
    params_.push_back({prefix + ".bias", ad::Tensor::zeros(1, w, true)});
    fan_in = w;
  }
  head_weight_ = params_.size();
  params_.push_back({"f1.head.weight", uniform_weight(w, w + 1, std::sqrt(3.0 / w), rng)});
  head_bias_ = params_.size();
  params_.push_back({"f1.head.bias", ad::Tensor::zeros(1, w + 1, true)});
  decoder_latent_ = params_.size();
  params_.push_back({"f2.latent_weight", uniform_weight(w, 4, std::sqrt(3.0 / w), rng)});
  const size_t dir_dim = dir_encoding_.output_dim();
  decoder_dir_ = params_.size();
  params_.push_back({"f2.dir_weight", uniform_weight(dir_dim, 4, std::sqrt(3.0 / dir_dim), rng)});
  decoder_bias_ = params_.size();
  params_.push_back({"f2.bias", ad::Tensor::zeros(1, 4, true)});
}

DensityOutput RadianceField::query_density(std::span<const Vec3> points) const {
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw NumericError("query_density: non-finite point");
  }
  counter_.f1_points += points.size();
  ad::Tensor h = pos_encoding_.encode_batch(points);
  for (size_t layer = 0; layer < trunk_weights_.size(); ++layer) {
    h = ad::relu(ad::matmul(h, params_[trunk_weights_[layer]].tensor) + params_[trunk_biases_[layer]].tensor);
  }
  const ad::Tensor out = ad::matmul(h, params_[head_weight_].tensor) + params_[head_bias_].tensor;
  const size_t w = config_.width;
  return {ad::softplus(ad::slice_cols(out, 0, 1)), ad::slice_cols(out, 1, w + 1)};
}

RadianceOutput RadianceField::query_radiance(const ad::Tensor& latent, std::span<const Vec3> view_dirs) const {
  const size_t n = latent.rows();
  if (latent.cols() != static_cast<size_t>(config_.width)) {
    throw ShapeError("query_radiance: latent width " + std::to_string(latent.cols()) + " != " +
                     std::to_string(config_.width));
  }
  if (view_dirs.size() != 1 && view_dirs.size() != n) {
    throw ShapeError("query_radiance: expected 1 or " + std::to_string(n) + " directions, got " +
                     std::to_string(view_dirs.size()));
  }
  for (const Vec3& d : view_dirs) {
    if (!(std::abs(d.norm() - 1.0) <= 1e-6)) throw GeometryError("query_radiance: view direction is not unit length");
  }
  counter_.f2_points += n;
  ad::Tensor raw = ad::matmul(latent, params_[decoder_latent_].tensor) + params_[decoder_bias_].tensor;
  const ad::Tensor dir_term = ad::matmul(dir_encoding_.encode_batch(view_dirs), params_[decoder_dir_].tensor);
  // a single direction gives a (1, 4) term that broadcasts over rows
  raw = raw + dir_term;
  const ad::Tensor squashed = ad::sigmoid(raw);
  return {ad::slice_cols(squashed, 0, 3), ad::slice_cols(squashed, 3, 4)};
}

RadianceField RadianceField::clone() const {
  RadianceField copy = *this;
  for (auto& p : copy.params_) {
    p.tensor = ad::Tensor::from(std::vector<double>(p.tensor.values().begin(), p.tensor.values().end()),
                                p.tensor.rows(), p.tensor.cols(), true);
  }
  copy.counter_.reset();
  return copy;
}

}  // namespace vipnerf
