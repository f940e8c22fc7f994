// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vipnerf/geometry.hpp"
#include "vipnerf/image.hpp"

namespace vipnerf {

/// Smoothly textured sphere. `specular` > 0 adds a view-dependent highlight.
struct Sphere {
  Vec3 center;
  double radius = 1.0;
  Vec3 albedo;
  double texture = 0.12;    // amplitude of the per-channel sinusoids
  double frequency = 4.0;   // radians per radius
  double specular = 0.0;
};

struct Box {
  Vec3 min;
  Vec3 max;
  Vec3 albedo;
  double texture = 0.12;
  double frequency = 5.0;  // radians per world unit
};

/// Infinite plane z = depth facing -z, blending two colours per channel with smooth lattice noise.
struct Backdrop {
  double depth = 8.0;
  Vec3 albedo_a{0.78, 0.74, 0.62};
  Vec3 albedo_b{0.38, 0.52, 0.40};
  double cell = 0.8;  // noise lattice spacing in world units
};

struct AnalyticScene {
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;
  Backdrop backdrop;
  Vec3 light_dir{-0.3, -0.5, -1.0};  // towards the light; normalised on use
};

enum class SurfaceKind { Backdrop, Sphere, Box };

struct Hit {
  double t = 0.0;  // origin + t * direction
  Vec3 point;
  Vec3 normal;
  SurfaceKind kind = SurfaceKind::Backdrop;
  int index = -1;
};

/// Nearest hit with t > t_min along origin + t * direction.
std::optional<Hit> intersect(const AnalyticScene& scene, const Vec3& origin, const Vec3& direction,
                             double t_min = 1e-9);

/// Radiance seen from `view_dir` (unit, pointing from the eye to the surface).
Vec3 shade(const AnalyticScene& scene, const Hit& hit, const Vec3& view_dir);

struct GroundTruth {
  ImageRGB image;
  ScalarMap depth;  // camera-frame z of the first hit
};

GroundTruth raycast_ground_truth(const AnalyticScene& scene, const Camera& cam);
GroundTruth raycast_ground_truth_reference(const AnalyticScene& scene, const Camera& cam);

/// Primary pixels whose first-hit surface point is also the first hit seen
/// from the secondary camera and projects inside its frame.
Mask ground_truth_visibility(const AnalyticScene& scene, const Camera& primary, const Camera& secondary);

/// A scene, a camera rig sorted along the rig path, and the train/test split.
struct ScenePreset {
  std::string name;
  AnalyticScene scene;
  std::vector<Camera> cameras;  // index == view id
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

/// Presets: "sphere-box" (two-primitive toy scene, lateral rig), "lateral"
/// (extra sphere, lateral rig) and "arc" (same scene, inward-facing arc).
/// Throws UsageError listing the presets for an unknown name.
ScenePreset make_preset(const std::string& name, int train_views, int test_views, int resolution);
std::vector<std::string> preset_names();

/// Lateral baseline spanned by the training cameras of the lateral presets.
inline constexpr double kTrainBaseline = 0.5;

}  // namespace vipnerf
