// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/render.hpp"

#include <algorithm>
#include <cmath>

#include "vipnerf/error.hpp"

namespace vipnerf {

namespace {

RaySamples samples_from_jitter(const Ray& ray, double z_min, double z_max, std::span<const double> jitter) {
  const size_t n = jitter.size();
  if (n < 2) throw UsageError("stratified sampling needs at least 2 samples");
  if (!(z_min < z_max)) throw UsageError("stratified sampling needs z_min < z_max");
  RaySamples s;
  s.depths.resize(n);
  s.deltas.resize(n);
  s.points.resize(n);
  const double bin = (z_max - z_min) / static_cast<double>(n);
  for (size_t k = 0; k < n; ++k) s.depths[k] = z_min + (static_cast<double>(k) + jitter[k]) * bin;
  for (size_t k = 0; k + 1 < n; ++k) s.deltas[k] = s.depths[k + 1] - s.depths[k];
  s.deltas[n - 1] = z_max - s.depths[n - 1];
  for (size_t k = 0; k < n; ++k) s.points[k] = ray.at(s.depths[k]);
  return s;
}

}  // namespace

RaySamples stratified_sample(const Ray& ray, double z_min, double z_max, int n, std::mt19937_64& rng) {
  if (n < 2) throw UsageError("stratified sampling needs at least 2 samples");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> jitter(n);
  for (double& j : jitter) j = uniform(rng);
  return samples_from_jitter(ray, z_min, z_max, jitter);
}

RaySamples stratified_sample(const Ray& ray, double z_min, double z_max, std::span<const double> jitter) {
  return samples_from_jitter(ray, z_min, z_max, jitter);
}

void RayBundle::append(const Ray& ray, const RaySamples& samples, double far) {
  if (rays.empty()) samples_per_ray = samples.depths.size();
  if (samples.depths.size() != samples_per_ray) throw ShapeError("bundle rays must share the sample count");
  rays.push_back(ray);
  depths.insert(depths.end(), samples.depths.begin(), samples.depths.end());
  deltas.insert(deltas.end(), samples.deltas.begin(), samples.deltas.end());
  points.insert(points.end(), samples.points.begin(), samples.points.end());
  z_max.push_back(far);
}

ad::Tensor RayBundle::depth_tensor() const { return ad::Tensor::from(depths, ray_count(), samples_per_ray); }
ad::Tensor RayBundle::delta_tensor() const { return ad::Tensor::from(deltas, ray_count(), samples_per_ray); }

std::vector<Vec3> RayBundle::sample_view_dirs() const {
  std::vector<Vec3> dirs;
  dirs.reserve(points.size());
  for (const Ray& r : rays) dirs.insert(dirs.end(), samples_per_ray, r.unit_view_dir);
  return dirs;
}

RayBundle make_bundle(const std::vector<Ray>& rays, double z_min, double z_max, int samples, std::mt19937_64* rng) {
  RayBundle bundle;
  const std::vector<double> midpoints(samples, 0.5);
  for (const Ray& ray : rays) {
    bundle.append(ray, rng ? stratified_sample(ray, z_min, z_max, samples, *rng)
                           : stratified_sample(ray, z_min, z_max, midpoints),
                  z_max);
  }
  return bundle;
}

RenderOutput composite(const ad::Tensor& sigma, const ad::Tensor& color, const ad::Tensor& depths,
                       const ad::Tensor& deltas) {
  const size_t rays = sigma.rows();
  const size_t n = sigma.cols();
  if (deltas.shape() != sigma.shape() || depths.shape() != sigma.shape()) {
    throw ShapeError("composite: sigma " + ad::to_string(sigma.shape()) + ", deltas " + ad::to_string(deltas.shape()) +
                     ", depths " + ad::to_string(depths.shape()));
  }
  if (color.rows() != rays * n || color.cols() != 3) {
    throw ShapeError("composite: colour must be (rays * samples, 3), got " + ad::to_string(color.shape()));
  }
  for (double s : sigma.values()) {
    if (!(s >= 0.0)) throw NumericError("composite: negative or NaN density " + std::to_string(s));
  }
  RenderOutput out;
  const ad::Tensor optical = sigma * deltas;
  out.transmittance = ad::exp(-ad::cumsum_exclusive(optical));
  const ad::Tensor alpha = ad::add_scalar(-ad::exp(-optical), 1.0);
  out.weights = out.transmittance * alpha;
  out.color = ad::group_sum_rows(ad::scale_rows(color, ad::reshape(out.weights, rays * n, 1)), n);
  out.depth = ad::sum_cols(out.weights * depths);
  out.opacity = ad::sum_cols(out.weights);
  out.final_transmittance = ad::exp(-ad::sum_cols(optical));
  return out;
}

BundleRender render_bundle(const RadianceField& field, const RayBundle& bundle) {
  BundleRender r;
  r.density = field.query_density(bundle.points);
  const std::vector<Vec3> dirs = bundle.sample_view_dirs();
  r.radiance = field.query_radiance(r.density.latent, dirs);
  const ad::Tensor sigma = ad::reshape(r.density.sigma, bundle.ray_count(), bundle.samples_per_ray);
  r.output = composite(sigma, r.radiance.color, bundle.depth_tensor(), bundle.delta_tensor());
  return r;
}

SecondaryVisibility pixel_visibility_efficient(const RadianceField& field, const RayBundle& bundle,
                                               const ad::Tensor& latent, const RenderOutput& render,
                                               const Camera& secondary) {
  const size_t total = bundle.points.size();
  if (latent.rows() != total) throw ShapeError("pixel_visibility_efficient: latent rows != sample count");
  const Vec3 origin = secondary.center();
  std::vector<Vec3> dirs(total);
  for (size_t i = 0; i < total; ++i) {
    const Vec3 offset = bundle.points[i] - origin;
    const double len = offset.norm();
    // a sample exactly at the secondary centre has no direction; fall back to the primary one
    dirs[i] = len > 1e-12 ? Vec3(offset / len) : bundle.rays[i / bundle.samples_per_ray].unit_view_dir;
  }
  const RadianceOutput secondary_out = field.query_radiance(latent, dirs);
  SecondaryVisibility vis;
  vis.point_visibility = ad::reshape(secondary_out.visibility, bundle.ray_count(), bundle.samples_per_ray);
  vis.pixel_visibility = ad::sum_cols(render.weights * vis.point_visibility);
  return vis;
}

DensityFn density_function(const RadianceField& field) {
  return [&field](std::span<const Vec3> points) {
    ad::NoGradScope no_grad;
    const DensityOutput d = field.query_density(points);
    return std::vector<double>(d.sigma.values().begin(), d.sigma.values().end());
  };
}

NaiveVisibility pixel_visibility_naive(const DensityFn& density, const RayBundle& bundle,
                                       std::span<const double> weights, const Camera& secondary, int m) {
  if (m < 2) throw UsageError("naive visibility needs at least 2 marching samples");
  const size_t n = bundle.samples_per_ray;
  const size_t total = bundle.points.size();
  if (weights.size() != total) throw ShapeError("pixel_visibility_naive: weight count != sample count");
  const Vec3 origin = secondary.center();
  const double near = secondary.z_min();

  NaiveVisibility out;
  out.point_visibility.assign(total, 0.0);
  out.pixel_visibility.assign(bundle.ray_count(), 0.0);
  std::vector<Vec3> march(m);
  for (size_t i = 0; i < total; ++i) {
    const Vec3& p = bundle.points[i];
    const double depth = secondary.to_camera(p).z();
    double t = 0.0;
    if (depth > 1e-9) {
      if (depth <= near) {
        t = 1.0;
      } else {
        // p = origin + depth * dir with dir having unit camera-frame z
        const Vec3 dir = (p - origin) / depth;
        const double step = (depth - near) / m;
        for (int j = 0; j < m; ++j) march[j] = origin + (near + (j + 0.5) * step) * dir;
        const std::vector<double> sigma = density(march);
        double optical = 0.0;
        for (double s : sigma) optical += s * step;
        t = std::exp(-optical);
      }
    }
    out.point_visibility[i] = t;
    out.pixel_visibility[i / n] += weights[i] * t;
  }
  return out;
}

std::vector<Ray> pixel_rays(const Camera& cam) {
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(cam.width()) * cam.height());
  for (int y = 0; y < cam.height(); ++y) {
    for (int x = 0; x < cam.width(); ++x) rays.push_back(ray_through_pixel(cam, Vec2(x, y)));
  }
  return rays;
}

namespace {

void render_chunk(const RadianceField& field, const Camera& cam, const std::vector<Ray>& rays, size_t begin,
                  size_t end, int samples, RenderedView& view) {
  ad::NoGradScope no_grad;
  const std::vector<Ray> chunk(rays.begin() + begin, rays.begin() + end);
  const RayBundle bundle = make_bundle(chunk, cam.z_min(), cam.z_max(), samples, nullptr);
  const BundleRender r = render_bundle(field, bundle);
  const int w = cam.width();
  for (size_t i = begin; i < end; ++i) {
    const size_t local = i - begin;
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    for (int c = 0; c < 3; ++c) view.color(x, y, c) = std::clamp(r.output.color.at(local, c), 0.0, 1.0);
    const double acc = r.output.opacity.at(local, 0);
    view.opacity(x, y) = acc;
    view.depth(x, y) = std::clamp(r.output.depth.at(local, 0) + (1.0 - acc) * cam.z_max(), cam.z_min(), cam.z_max());
  }
}

RenderedView blank_view(const Camera& cam) {
  return {make_rgb(cam.width(), cam.height()), make_scalar_map(cam.width(), cam.height()),
          make_scalar_map(cam.width(), cam.height())};
}

}  // namespace

RenderedView render_view(const RadianceField& field, const Camera& cam, int samples, size_t chunk) {
  const std::vector<Ray> rays = pixel_rays(cam);
  RenderedView view = blank_view(cam);
  const long chunks = static_cast<long>((rays.size() + chunk - 1) / chunk);
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < chunks; ++c) {
    const size_t begin = static_cast<size_t>(c) * chunk;
    render_chunk(field, cam, rays, begin, std::min(rays.size(), begin + chunk), samples, view);
  }
  return view;
}

RenderedView render_view_reference(const RadianceField& field, const Camera& cam, int samples) {
  const std::vector<Ray> rays = pixel_rays(cam);
  RenderedView view = blank_view(cam);
  for (size_t i = 0; i < rays.size(); ++i) render_chunk(field, cam, rays, i, i + 1, samples, view);
  return view;
}

ScalarMap render_visibility_map(const RadianceField& field, const Camera& primary, const Camera& secondary,
                                int samples, size_t chunk) {
  const std::vector<Ray> rays = pixel_rays(primary);
  ScalarMap map = make_scalar_map(primary.width(), primary.height());
  const long chunks = static_cast<long>((rays.size() + chunk - 1) / chunk);
  const int w = primary.width();
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < chunks; ++c) {
    ad::NoGradScope no_grad;
    const size_t begin = static_cast<size_t>(c) * chunk;
    const size_t end = std::min(rays.size(), begin + chunk);
    const std::vector<Ray> part(rays.begin() + begin, rays.begin() + end);
    const RayBundle bundle = make_bundle(part, primary.z_min(), primary.z_max(), samples, nullptr);
    const BundleRender r = render_bundle(field, bundle);
    const SecondaryVisibility vis = pixel_visibility_efficient(field, bundle, r.density.latent, r.output, secondary);
    for (size_t i = begin; i < end; ++i) {
      map(static_cast<int>(i % w), static_cast<int>(i / w)) = vis.pixel_visibility.at(i - begin, 0);
    }
  }
  return map;
}

}  // namespace vipnerf
