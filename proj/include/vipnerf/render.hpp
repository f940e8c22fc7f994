// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "vipnerf/field.hpp"
#include "vipnerf/geometry.hpp"
#include "vipnerf/tensor.hpp"

namespace vipnerf {

/// Samples along one ray. deltas[i] = depths[i+1] - depths[i]; the last
/// interval runs to z_max.
struct RaySamples {
  std::vector<double> depths;
  std::vector<double> deltas;
  std::vector<Vec3> points;
};

/// One uniform jitter per bin of [z_min, z_max] split into n equal bins.
RaySamples stratified_sample(const Ray& ray, double z_min, double z_max, int n, std::mt19937_64& rng);
/// Same with explicit jitters in [0, 1]; 0.5 gives bin midpoints.
RaySamples stratified_sample(const Ray& ray, double z_min, double z_max, std::span<const double> jitter);

/// A batch of rays with the same sample count, flattened ray-major.
struct RayBundle {
  size_t samples_per_ray = 0;
  std::vector<Ray> rays;
  std::vector<double> depths;  // ray_count * samples_per_ray
  std::vector<double> deltas;
  std::vector<Vec3> points;
  std::vector<double> z_max;  // per ray, used as the background depth

  size_t ray_count() const { return rays.size(); }
  void append(const Ray& ray, const RaySamples& samples, double far);
  ad::Tensor depth_tensor() const;
  ad::Tensor delta_tensor() const;
  /// Each ray's unit view direction repeated once per sample.
  std::vector<Vec3> sample_view_dirs() const;
};

/// Stratified (jittered with rng) or midpoint (rng == nullptr) samples for all rays.
RayBundle make_bundle(const std::vector<Ray>& rays, double z_min, double z_max, int samples, std::mt19937_64* rng);

struct RenderOutput {
  ad::Tensor transmittance;        // (R, N), T_1 = 1
  ad::Tensor weights;              // (R, N)
  ad::Tensor color;                // (R, 3)
  ad::Tensor depth;                // (R, 1), sum_i w_i z_i
  ad::Tensor opacity;              // (R, 1), sum_i w_i
  ad::Tensor final_transmittance;  // (R, 1), T_{N+1}
};

/// Volume rendering of per-sample density (R, N) and colour (R * N, 3).
/// Throws NumericError on negative density.
RenderOutput composite(const ad::Tensor& sigma, const ad::Tensor& color, const ad::Tensor& depths,
                       const ad::Tensor& deltas);

/// Field evaluation plus compositing for a bundle along the primary view directions.
struct BundleRender {
  DensityOutput density;
  RadianceOutput radiance;
  RenderOutput output;
};

BundleRender render_bundle(const RadianceField& field, const RayBundle& bundle);

struct SecondaryVisibility {
  ad::Tensor pixel_visibility;  // (R, 1), t'
  ad::Tensor point_visibility;  // (R, N), predicted T'_i
};

/// t' = sum_i w_i T'_i with T'_i from the decoder queried along the direction
/// from the secondary camera to each sample. Reuses the latents, so it costs
/// N decoder queries per ray and no density-trunk queries.
SecondaryVisibility pixel_visibility_efficient(const RadianceField& field, const RayBundle& bundle,
                                               const ad::Tensor& latent, const RenderOutput& render,
                                               const Camera& secondary);

/// Density lookup used by the marching oracle.
using DensityFn = std::function<std::vector<double>(std::span<const Vec3>)>;

/// Wraps query_density without recording gradients.
DensityFn density_function(const RadianceField& field);

struct NaiveVisibility {
  std::vector<double> pixel_visibility;  // R
  std::vector<double> point_visibility;  // R * N
};

/// Reference t': each T'_i is obtained by marching m midpoint samples along the
/// secondary ray from the secondary camera's near bound to p_i (depth units of
/// the secondary camera). Points behind the secondary camera get T'_i = 0.
/// Costs N * m density queries per ray.
NaiveVisibility pixel_visibility_naive(const DensityFn& density, const RayBundle& bundle,
                                       std::span<const double> weights, const Camera& secondary, int m);

/// Full-frame evaluation outputs for one camera.
struct RenderedView {
  ImageRGB color;
  ScalarMap depth;    // sum_i w_i z_i + (1 - sum_i w_i) z_max
  ScalarMap opacity;  // sum_i w_i
};

/// Renders every pixel with midpoint samples, rays split into chunks that run
/// in parallel with gradient recording disabled.
RenderedView render_view(const RadianceField& field, const Camera& cam, int samples, size_t chunk = 1024);
RenderedView render_view_reference(const RadianceField& field, const Camera& cam, int samples);

/// Predicted t' for every pixel of `primary` against `secondary`.
ScalarMap render_visibility_map(const RadianceField& field, const Camera& primary, const Camera& secondary,
                                int samples, size_t chunk = 1024);

/// Rays through integer pixel centres, row-major.
std::vector<Ray> pixel_rays(const Camera& cam);

}  // namespace vipnerf
