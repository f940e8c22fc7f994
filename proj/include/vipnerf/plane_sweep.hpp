// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "vipnerf/geometry.hpp"
#include "vipnerf/image.hpp"

namespace vipnerf {

/// Plane depths with reciprocals equally spaced, in increasing depth order.
struct PlaneDepths {
  std::vector<double> depths;
  size_t count() const { return depths.size(); }
};

PlaneDepths sample_plane_depths(double z_min, double z_max, int count);

/// Secondary image swept across the primary view.
struct PlaneSweepVolume {
  PlaneDepths planes;
  std::vector<ImageRGB> warped;
  std::vector<Mask> valid;
  /// Per-plane L1 colour error on the 0-255 scale; +inf where the warp is invalid.
  std::vector<ScalarMap> error_maps;
  /// Minimum over valid planes; +inf where no plane is valid.
  ScalarMap min_error;
  /// Index of the minimising plane (nearest on ties), -1 where no plane is valid.
  Raster<int> argmin_plane;

  int width() const { return min_error.width(); }
  int height() const { return min_error.height(); }
  bool matched(int x, int y) const { return argmin_plane(x, y) >= 0; }
};

PlaneSweepVolume build_psv(const ImageRGB& primary_image, const Camera& primary_cam, const ImageRGB& secondary_image,
                           const Camera& secondary_cam, const PlaneDepths& planes);
/// Serial reference with the same output.
PlaneSweepVolume build_psv_reference(const ImageRGB& primary_image, const Camera& primary_cam,
                                     const ImageRGB& secondary_image, const Camera& secondary_cam,
                                     const PlaneDepths& planes);

struct VisibilityPriorMap {
  Mask tau;
  double gamma = 10.0;
  int primary_view = -1;
  int secondary_view = -1;
  int plane_count = 0;
};

/// tau(q) = 1 iff exp(-e(q) / gamma) > 0.5; unmatched pixels get 0.
VisibilityPriorMap visibility_prior(const PlaneSweepVolume& psv, double gamma);

struct DenseDepth {
  ScalarMap depth;
  Mask valid;
};

/// Depth of the minimum-error plane per pixel.
DenseDepth psv_dense_depth(const PlaneSweepVolume& psv);

/// One prior per ordered pair (a, b), a != b, in lexicographic order of view index.
/// view_ids labels the returned maps; defaults to positions when empty.
std::vector<VisibilityPriorMap> prior_for_all_pairs(const std::vector<ImageRGB>& images,
                                                    const std::vector<Camera>& cameras, int plane_count,
                                                    double gamma, const std::vector<int>& view_ids = {});

/// Writes <stem>.png (0 / 255) and <stem>.json.
void write_prior(const VisibilityPriorMap& prior, const std::string& directory);
VisibilityPriorMap read_prior(const std::string& png_path);
std::string prior_stem(int primary_view, int secondary_view);

}  // namespace vipnerf
