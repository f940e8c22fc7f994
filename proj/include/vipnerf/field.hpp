// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "vipnerf/geometry.hpp"
#include "vipnerf/optim.hpp"
#include "vipnerf/tensor.hpp"

namespace vipnerf {

struct FieldConfig {
  int width = 128;
  int depth = 4;
  int pos_freqs = 10;
  int dir_freqs = 4;
  bool include_input = true;

  bool operator==(const FieldConfig&) const = default;
};

/// Sinusoidal encoding [x, sin(2^k x), cos(2^k x)] for k < freqs, per component.
class PositionalEncoding {
 public:
  PositionalEncoding(int freqs, bool include_input);

  int output_dim(int input_dim = 3) const { return input_dim * ((include_input_ ? 1 : 0) + 2 * freqs_); }
  void encode(const Vec3& v, std::span<double> out) const;
  /// (n, output_dim) constant tensor.
  ad::Tensor encode_batch(std::span<const Vec3> vectors) const;

 private:
  int freqs_;
  bool include_input_;
};

/// Counts per-point network evaluations. F1 is the density trunk, F2 the
/// colour/visibility decoder.
struct QueryCounter {
  std::atomic<std::uint64_t> f1_points{0};
  std::atomic<std::uint64_t> f2_points{0};

  QueryCounter() = default;
  QueryCounter(const QueryCounter& other) : f1_points(other.f1_points.load()), f2_points(other.f2_points.load()) {}
  QueryCounter& operator=(const QueryCounter& other) {
    f1_points = other.f1_points.load();
    f2_points = other.f2_points.load();
    return *this;
  }
  void reset() {
    f1_points = 0;
    f2_points = 0;
  }
};

struct DensityOutput {
  ad::Tensor sigma;   // (n, 1), softplus so >= 0
  ad::Tensor latent;  // (n, width)
};

struct RadianceOutput {
  ad::Tensor color;       // (n, 3) in [0, 1]
  ad::Tensor visibility;  // (n, 1) in [0, 1]
};

/// Density trunk F1 (ReLU MLP) followed by a single linear decoder F2 whose
/// four outputs are squashed into RGB and a view-dependent visibility.
/// Copies share parameter storage; use clone() for an independent field.
class RadianceField {
 public:
  RadianceField(FieldConfig config, std::uint64_t seed);

  DensityOutput query_density(std::span<const Vec3> points) const;

  /// view_dirs holds either one unit direction shared by all rows of latent,
  /// or one per row. Throws GeometryError for non-unit directions.
  RadianceOutput query_radiance(const ad::Tensor& latent, std::span<const Vec3> view_dirs) const;

  const FieldConfig& config() const { return config_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  QueryCounter& counter() const { return counter_; }

  RadianceField clone() const;

 private:
  FieldConfig config_;
  PositionalEncoding pos_encoding_;
  PositionalEncoding dir_encoding_;
  std::vector<NamedParameter> params_;
  // indices into params_
  std::vector<size_t> trunk_weights_;
  std::vector<size_t> trunk_biases_;
  size_t head_weight_ = 0;
  size_t head_bias_ = 0;
  size_t decoder_latent_ = 0;
  size_t decoder_dir_ = 0;
  size_t decoder_bias_ = 0;
  mutable QueryCounter counter_;
};

}  // namespace vipnerf
