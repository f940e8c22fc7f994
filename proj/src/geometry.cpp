// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vipnerf {

namespace {

constexpr double kMinDepth = 1e-9;

std::string fmt_pixel(const Vec2& p) { return "(" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ")"; }

template <bool Parallel>
WarpResult warp_impl(const Camera& primary, const Camera& secondary, const ImageRGB& secondary_image, double z) {
  const double tol = 1e-9 * primary.z_max();
  if (z < primary.z_min() - tol || z > primary.z_max() + tol) {
    throw GeometryError("warp depth " + std::to_string(z) + " outside [" + std::to_string(primary.z_min()) + ", " +
                        std::to_string(primary.z_max()) + "]");
  }
  if (secondary_image.width() != secondary.width() || secondary_image.height() != secondary.height()) {
    throw ShapeError("secondary image resolution does not match its camera");
  }
  const int w = primary.width();
  const int h = primary.height();
  WarpResult out{make_rgb(w, h), make_mask(w, h)};
  const Mat3 k_inv = primary.intrinsics().inverse();
  const Mat3 rot = primary.rotation();
  const Vec3 origin = primary.center();
#pragma omp parallel for schedule(static) if (Parallel)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 dir = rot * (k_inv * Vec3(x, y, 1.0));
      const auto proj = try_project(secondary, origin + z * dir);
      if (!proj) continue;
      double rgb[3];
      if (!sample_bilinear(secondary_image, proj->pixel.x(), proj->pixel.y(), rgb)) continue;
      out.valid(x, y) = 1;
      for (int c = 0; c < 3; ++c) out.warped(x, y, c) = rgb[c];
    }
  }
  return out;
}

}  // namespace

Camera::Camera(const Mat3& intrinsics, const Mat4& world_from_camera, double z_min, double z_max, int width,
               int height)
    : intrinsics_(intrinsics), world_from_camera_(world_from_camera), z_min_(z_min), z_max_(z_max), width_(width),
      height_(height) {
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0)) throw GeometryError("camera: fx and fy must be > 0");
  if (intrinsics(0, 1) != 0.0 || intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 ||
      intrinsics(2, 2) != 1.0) {
    throw GeometryError("camera: intrinsics must be zero-skew pinhole [fx 0 cx; 0 fy cy; 0 0 1]");
  }
  const Mat3 r = world_from_camera.block<3, 3>(0, 0);
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw GeometryError("camera: rotation block is not orthonormal");
  }
  if (world_from_camera.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw GeometryError("camera: last row of world_from_camera must be [0 0 0 1]");
  }
  if (!(z_min > 0.0) || !(z_min < z_max)) throw GeometryError("camera: need 0 < z_min < z_max");
  if (width <= 0 || height <= 0) throw GeometryError("camera: width and height must be positive");
}

Camera Camera::from_pose(double fx, double fy, double cx, double cy, const Mat3& rotation, const Vec3& center,
                         double z_min, double z_max, int width, int height) {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  Mat4 pose = Mat4::Identity();
  pose.block<3, 3>(0, 0) = rotation;
  pose.block<3, 1>(0, 3) = center;
  return Camera(k, pose, z_min, z_max, width, height);
}

bool Camera::contains(const Vec2& pixel) const {
  return pixel.x() >= -0.5 && pixel.x() <= width_ - 0.5 && pixel.y() >= -0.5 && pixel.y() <= height_ - 0.5;
}

Vec3 Camera::to_camera(const Vec3& world) const { return rotation().transpose() * (world - center()); }

Ray ray_through_pixel(const Camera& cam, const Vec2& pixel) {
  if (!cam.contains(pixel)) throw GeometryError("pixel " + fmt_pixel(pixel) + " outside image bounds");
  const Vec3 local((pixel.x() - cam.cx()) / cam.fx(), (pixel.y() - cam.cy()) / cam.fy(), 1.0);
  Ray ray;
  ray.origin = cam.center();
  ray.direction = cam.rotation() * local;
  ray.unit_view_dir = ray.direction.normalized();
  return ray;
}

std::optional<Projection> try_project(const Camera& cam, const Vec3& world_point) {
  const Vec3 local = cam.to_camera(world_point);
  if (local.z() <= kMinDepth) return std::nullopt;
  return Projection{Vec2(cam.fx() * local.x() / local.z() + cam.cx(), cam.fy() * local.y() / local.z() + cam.cy()),
                    local.z()};
}

Projection project(const Camera& cam, const Vec3& world_point) {
  auto p = try_project(cam, world_point);
  if (!p) throw GeometryError("point is behind the camera");
  return *p;
}

bool sample_bilinear(const ImageRGB& image, double x, double y, double* rgb) {
  const int w = image.width();
  const int h = image.height();
  constexpr double kEdge = 1e-9;  // projection round-off at the border
  if (!(x >= -kEdge && y >= -kEdge && x <= w - 1 + kEdge && y <= h - 1 + kEdge)) return false;
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 1);
  const int y0 = std::min(static_cast<int>(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int c = 0; c < 3; ++c) {
    // lerp form keeps constant images exactly constant
    const double top = image(x0, y0, c) + fx * (image(x1, y0, c) - image(x0, y0, c));
    const double bottom = image(x0, y1, c) + fx * (image(x1, y1, c) - image(x0, y1, c));
    rgb[c] = top + fy * (bottom - top);
  }
  return true;
}

WarpResult warp_at_depth(const Camera& primary, const Camera& secondary, const ImageRGB& secondary_image, double z) {
  return warp_impl<true>(primary, secondary, secondary_image, z);
}

WarpResult warp_at_depth_reference(const Camera& primary, const Camera& secondary, const ImageRGB& secondary_image,
                                   double z) {
  return warp_impl<false>(primary, secondary, secondary_image, z);
}

Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& down) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = down.cross(forward).normalized();
  const Vec3 new_down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = new_down;
  r.col(2) = forward;
  return r;
}

}  // namespace vipnerf
