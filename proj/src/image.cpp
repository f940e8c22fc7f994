// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/image.hpp"

#include <algorithm>
#include <cmath>

namespace vipnerf {

ImageRGB quantize_8bit(const ImageRGB& image) {
  ImageRGB out = image;
  for (double& v : out.data()) {
    v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return out;
}

ScalarMap to_luma(const ImageRGB& image) {
  ScalarMap luma = make_scalar_map(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      luma(x, y) = 0.299 * image(x, y, 0) + 0.587 * image(x, y, 1) + 0.114 * image(x, y, 2);
    }
  }
  return luma;
}

}  // namespace vipnerf
