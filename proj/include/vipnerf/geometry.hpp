// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "vipnerf/image.hpp"

namespace vipnerf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Zero-skew pinhole camera. Camera frame: x right, y down, z forward.
/// Pixel centers sit at integer coordinates.
class Camera {
 public:
  Camera(const Mat3& intrinsics, const Mat4& world_from_camera, double z_min, double z_max, int width,
         int height);

  /// Intrinsics (fx, fy, cx, cy) with the camera placed by a rotation and center.
  static Camera from_pose(double fx, double fy, double cx, double cy, const Mat3& rotation, const Vec3& center,
                          double z_min, double z_max, int width, int height);

  const Mat3& intrinsics() const { return intrinsics_; }
  const Mat4& world_from_camera() const { return world_from_camera_; }
  Mat3 rotation() const { return world_from_camera_.block<3, 3>(0, 0); }
  Vec3 center() const { return world_from_camera_.block<3, 1>(0, 3); }
  double fx() const { return intrinsics_(0, 0); }
  double fy() const { return intrinsics_(1, 1); }
  double cx() const { return intrinsics_(0, 2); }
  double cy() const { return intrinsics_(1, 2); }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool contains(const Vec2& pixel) const;
  /// World point to camera frame.
  Vec3 to_camera(const Vec3& world) const;

  bool operator==(const Camera&) const = default;

 private:
  Mat3 intrinsics_;
  Mat4 world_from_camera_;
  double z_min_;
  double z_max_;
  int width_;
  int height_;
};

/// Point at depth z is origin + z * direction; direction has unit camera-frame z.
struct Ray {
  Vec3 origin;
  Vec3 direction;
  Vec3 unit_view_dir;

  Vec3 at(double depth) const { return origin + depth * direction; }
};

/// Throws GeometryError when the pixel lies outside [-0.5, size - 0.5].
Ray ray_through_pixel(const Camera& cam, const Vec2& pixel);

struct Projection {
  Vec2 pixel;
  double depth;
};

/// Throws GeometryError for points with camera depth <= 1e-9.
Projection project(const Camera& cam, const Vec3& world_point);
/// Non-throwing variant: nullopt behind the camera.
std::optional<Projection> try_project(const Camera& cam, const Vec3& world_point);

/// Bilinear lookup; returns false unless 0 <= x <= width-1 and 0 <= y <= height-1.
bool sample_bilinear(const ImageRGB& image, double x, double y, double* rgb);

struct WarpResult {
  ImageRGB warped;
  Mask valid;
};

/// Backprojects every primary pixel to depth z and samples the secondary
/// image there. Pixels that land outside the secondary frame or behind the
/// secondary camera are marked invalid and left black.
WarpResult warp_at_depth(const Camera& primary, const Camera& secondary, const ImageRGB& secondary_image, double z);
WarpResult warp_at_depth_reference(const Camera& primary, const Camera& secondary, const ImageRGB& secondary_image,
                                   double z);

/// Rotation whose camera z axis points from `eye` to `target` with y roughly along `down`.
Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& down = Vec3(0, 1, 0));

}  // namespace vipnerf
