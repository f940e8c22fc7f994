// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>

#include "vipnerf/image.hpp"
#include "vipnerf/plane_sweep.hpp"

namespace vipnerf::oracle {

/// Index of the plane whose disparity is closest to 1/depth.
inline int nearest_plane(const PlaneDepths& planes, double depth) {
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < planes.count(); ++k) {
    const double gap = std::abs(1.0 / planes.depths[k] - 1.0 / depth);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(k);
    }
  }
  return best;
}

/// Pixels within `radius` (Chebyshev) of a change in visibility or in the
/// nearest sweep plane of the true depth.
inline Mask boundary_band(const Mask& visibility, const ScalarMap& depth, const PlaneDepths& planes, int radius = 1) {
  const int w = visibility.width();
  const int h = visibility.height();
  Raster<int> plane(w, h, 1, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) plane(x, y) = nearest_plane(planes, depth(x, y));
  }
  Mask band = make_mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool edge = false;
      for (int dy = -radius; dy <= radius && !edge; ++dy) {
        for (int dx = -radius; dx <= radius && !edge; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          edge = visibility(nx, ny) != visibility(x, y) || plane(nx, ny) != plane(x, y);
        }
      }
      band(x, y) = edge ? 1 : 0;
    }
  }
  return band;
}

}  // namespace vipnerf::oracle
