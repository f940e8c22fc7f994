// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace vipnerf {

namespace {

constexpr double kNear = 2.0;
constexpr double kFar = 8.0;

std::optional<double> hit_sphere(const Sphere& s, const Vec3& o, const Vec3& d, double t_min) {
  const Vec3 oc = o - s.center;
  const double a = d.squaredNorm();
  const double b = d.dot(oc);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double near = (-b - root) / a;
  if (near > t_min) return near;
  const double far = (-b + root) / a;
  if (far > t_min) return far;
  return std::nullopt;
}

std::optional<std::pair<double, Vec3>> hit_box(const Box& box, const Vec3& o, const Vec3& d, double t_min) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis0 = -1;
  int axis1 = -1;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double ta = (box.min[a] - o[a]) / d[a];
    double tb = (box.max[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      axis0 = a;
    }
    if (tb < t1) {
      t1 = tb;
      axis1 = a;
    }
  }
  if (t0 > t1) return std::nullopt;
  double t = t0;
  int axis = axis0;
  if (!(t > t_min)) {
    t = t1;
    axis = axis1;
  }
  if (!(t > t_min) || axis < 0) return std::nullopt;
  Vec3 normal = Vec3::Zero();
  normal[axis] = d[axis] > 0.0 ? -1.0 : 1.0;
  if (t == t1 && t != t0) normal = -normal;
  return std::make_pair(t, normal);
}

double wave(const Vec3& axis, const Vec3& p, double freq, double phase) { return std::sin(freq * axis.dot(p) + phase); }

Vec3 textured(const Vec3& base, double amplitude, const Vec3& p, double freq) {
  static const Vec3 a0 = Vec3(0.8, 0.6, 0.0).normalized();
  static const Vec3 a1 = Vec3(-0.3, 0.9, 0.3).normalized();
  static const Vec3 a2 = Vec3(0.5, -0.2, 0.84).normalized();
  Vec3 c(base.x() + amplitude * wave(a0, p, freq, 0.3), base.y() + amplitude * wave(a1, p, 1.3 * freq, 1.1),
         base.z() + amplitude * wave(a2, p, 0.8 * freq, 2.0));
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

double lattice_value(long long i, long long j, int layer) {
  uint64_t h = static_cast<uint64_t>(i) * 0x9E3779B97F4A7C15ULL ^ static_cast<uint64_t>(j) * 0xC2B2AE3D27D4EB4FULL ^
               static_cast<uint64_t>(layer + 1) * 0x165667B19E3779F9ULL;
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ULL;
  h ^= h >> 29;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smoothstep-interpolated lattice noise in [0, 1).
double value_noise(double u, double v, int layer) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const auto i = static_cast<long long>(fu);
  const auto j = static_cast<long long>(fv);
  const auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double su = smooth(u - fu);
  const double sv = smooth(v - fv);
  const double top = std::lerp(lattice_value(i, j, layer), lattice_value(i + 1, j, layer), su);
  const double bottom = std::lerp(lattice_value(i, j + 1, layer), lattice_value(i + 1, j + 1, layer), su);
  return std::lerp(top, bottom, sv);
}

Vec3 albedo_at(const AnalyticScene& scene, const Hit& hit) {
  switch (hit.kind) {
    case SurfaceKind::Sphere: {
      const Sphere& s = scene.spheres[hit.index];
      return textured(s.albedo, s.texture, (hit.point - s.center) / s.radius, s.frequency);
    }
    case SurfaceKind::Box: {
      const Box& b = scene.boxes[hit.index];
      return textured(b.albedo, b.texture, hit.point, b.frequency);
    }
    case SurfaceKind::Backdrop: {
      const Backdrop& bd = scene.backdrop;
      Vec3 c;
      for (int ch = 0; ch < 3; ++ch) {
        const double mix = value_noise(hit.point.x() / bd.cell, hit.point.y() / bd.cell, ch);
        c[ch] = mix * bd.albedo_a[ch] + (1.0 - mix) * bd.albedo_b[ch];
      }
      return c;
    }
  }
  return Vec3::Zero();
}

template <bool Parallel>
GroundTruth raycast_impl(const AnalyticScene& scene, const Camera& cam) {
  GroundTruth gt{make_rgb(cam.width(), cam.height()), make_scalar_map(cam.width(), cam.height())};
  bool missed = false;
#pragma omp parallel for schedule(static) if (Parallel) reduction(|| : missed)
  for (int y = 0; y < cam.height(); ++y) {
    for (int x = 0; x < cam.width(); ++x) {
      const Ray ray = ray_through_pixel(cam, Vec2(x, y));
      const auto hit = intersect(scene, ray.origin, ray.direction);
      if (!hit) {
        missed = true;
        continue;
      }
      const Vec3 c = shade(scene, *hit, ray.unit_view_dir);
      for (int ch = 0; ch < 3; ++ch) gt.image(x, y, ch) = c[ch];
      gt.depth(x, y) = hit->t;
    }
  }
  if (missed) throw GeometryError("raycast: a camera ray missed every surface");
  return gt;
}

std::vector<double> rig_positions(int train_views, int test_views, std::vector<bool>& is_train) {
  std::vector<std::pair<double, bool>> all;
  for (int k = 0; k < train_views; ++k) {
    const double t = train_views == 1 ? 0.0 : -0.5 + static_cast<double>(k) / (train_views - 1);
    all.emplace_back(t * kTrainBaseline, true);
  }
  const double span = 1.4 * kTrainBaseline;
  for (int j = 0; j < test_views; ++j) {
    all.emplace_back(-0.5 * span + span * (j + 0.5) / test_views, false);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> positions;
  is_train.clear();
  for (const auto& [pos, train] : all) {
    positions.push_back(pos);
    is_train.push_back(train);
  }
  return positions;
}

AnalyticScene toy_scene(bool extra_sphere) {
  AnalyticScene scene;
  scene.spheres.push_back({Vec3(-0.35, 0.05, 5.0), 0.9, Vec3(0.22, 0.38, 0.80)});
  scene.boxes.push_back({Vec3(0.15, -0.55, 3.2), Vec3(0.95, 0.45, 4.0), Vec3(0.62, 0.40, 0.20)});
  if (extra_sphere) scene.spheres.push_back({Vec3(1.3, 0.9, 6.3), 0.6, Vec3(0.75, 0.30, 0.45)});
  scene.backdrop.depth = kFar;
  return scene;
}

}  // namespace

std::optional<Hit> intersect(const AnalyticScene& scene, const Vec3& origin, const Vec3& direction, double t_min) {
  std::optional<Hit> best;
  const auto consider = [&](double t, const Vec3& normal, SurfaceKind kind, int index) {
    if (best && t >= best->t) return;
    best = Hit{t, origin + t * direction, normal, kind, index};
  };
  for (size_t i = 0; i < scene.spheres.size(); ++i) {
    if (auto t = hit_sphere(scene.spheres[i], origin, direction, t_min)) {
      const Vec3 p = origin + *t * direction;
      consider(*t, (p - scene.spheres[i].center).normalized(), SurfaceKind::Sphere, static_cast<int>(i));
    }
  }
  for (size_t i = 0; i < scene.boxes.size(); ++i) {
    if (auto h = hit_box(scene.boxes[i], origin, direction, t_min)) {
      consider(h->first, h->second, SurfaceKind::Box, static_cast<int>(i));
    }
  }
  if (direction.z() > 0.0) {
    const double t = (scene.backdrop.depth - origin.z()) / direction.z();
    if (t > t_min) consider(t, Vec3(0, 0, -1), SurfaceKind::Backdrop, -1);
  }
  return best;
}

Vec3 shade(const AnalyticScene& scene, const Hit& hit, const Vec3& view_dir) {
  const Vec3 light = scene.light_dir.normalized();
  const double diffuse = std::max(0.0, hit.normal.dot(light));
  Vec3 c = albedo_at(scene, hit) * (0.35 + 0.65 * diffuse);
  if (hit.kind == SurfaceKind::Sphere) {
    const double spec = scene.spheres[hit.index].specular;
    if (spec > 0.0) {
      const Vec3 reflected = view_dir - 2.0 * view_dir.dot(hit.normal) * hit.normal;
      c += Vec3::Constant(spec * std::pow(std::max(0.0, reflected.dot(light)), 8.0));
    }
  }
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

GroundTruth raycast_ground_truth(const AnalyticScene& scene, const Camera& cam) {
  return raycast_impl<true>(scene, cam);
}

GroundTruth raycast_ground_truth_reference(const AnalyticScene& scene, const Camera& cam) {
  return raycast_impl<false>(scene, cam);
}

Mask ground_truth_visibility(const AnalyticScene& scene, const Camera& primary, const Camera& secondary) {
  Mask vis = make_mask(primary.width(), primary.height());
  const Vec3 sec_origin = secondary.center();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < primary.height(); ++y) {
    for (int x = 0; x < primary.width(); ++x) {
      const Ray ray = ray_through_pixel(primary, Vec2(x, y));
      const auto hit = intersect(scene, ray.origin, ray.direction);
      if (!hit) continue;
      const auto proj = try_project(secondary, hit->point);
      if (!proj) continue;
      const Vec2& q = proj->pixel;
      if (q.x() < 0.0 || q.y() < 0.0 || q.x() > secondary.width() - 1 || q.y() > secondary.height() - 1) continue;
      // parameterised so the surface point sits at t = 1
      const auto back = intersect(scene, sec_origin, hit->point - sec_origin);
      if (back && std::abs(back->t - 1.0) <= 1e-6) vis(x, y) = 1;
    }
  }
  return vis;
}

std::vector<std::string> preset_names() { return {"sphere-box", "lateral", "arc"}; }

ScenePreset make_preset(const std::string& name, int train_views, int test_views, int resolution) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown preset '" + name + "' (available: " + list + ")");
  }
  if (train_views < 2) throw UsageError("presets need at least 2 training views");
  if (test_views < 0) throw UsageError("test view count must be non-negative");
  if (resolution < 16) throw UsageError("resolution must be at least 16");

  ScenePreset preset;
  preset.name = name;
  preset.scene = toy_scene(name != "sphere-box");
  const double f = resolution;
  const double c = (resolution - 1) / 2.0;
  std::vector<bool> is_train;
  const std::vector<double> positions = rig_positions(train_views, test_views, is_train);
  for (size_t i = 0; i < positions.size(); ++i) {
    if (name == "arc") {
      const Vec3 target(0.0, 0.0, 5.0);
      const double radius = 5.0;
      const double theta = positions[i] / radius * 2.0;
      const Vec3 center(radius * std::sin(theta), 0.0, target.z() - radius * std::cos(theta));
      const Mat3 rot = look_at_rotation(center, target);
      // far bound: deepest backdrop point over the frame corners
      double far = 0.0;
      for (double px : {0.0, resolution - 1.0}) {
        for (double py : {0.0, resolution - 1.0}) {
          const Vec3 dir = rot * Vec3((px - c) / f, (py - c) / f, 1.0);
          far = std::max(far, (kFar - center.z()) / dir.z());
        }
      }
      preset.cameras.push_back(Camera::from_pose(f, f, c, c, rot, center, kNear, far, resolution, resolution));
    } else {
      preset.cameras.push_back(Camera::from_pose(f, f, c, c, Mat3::Identity(), Vec3(positions[i], 0.0, 0.0), kNear,
                                                 kFar, resolution, resolution));
    }
    (is_train[i] ? preset.train_ids : preset.test_ids).push_back(static_cast<int>(i));
  }
  return preset;
}

}  // namespace vipnerf
