// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "vipnerf/error.hpp"

namespace vipnerf {

/// Interleaved row-major raster (x fastest, then channel-interleaved).
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<size_t>(width) * height * channels, fill) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw ShapeError("raster dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  size_t pixel_count() const { return static_cast<size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  bool operator==(const Raster& other) const = default;

 private:
  size_t index(int x, int y, int c) const {
    return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

/// RGB in [0, 1].
using ImageRGB = Raster<double>;
/// Single channel real-valued map (depth, error, visibility).
using ScalarMap = Raster<double>;
/// Binary mask, 0 or 1.
using Mask = Raster<std::uint8_t>;

inline ImageRGB make_rgb(int width, int height, double fill = 0.0) { return ImageRGB(width, height, 3, fill); }
inline ScalarMap make_scalar_map(int width, int height, double fill = 0.0) { return ScalarMap(width, height, 1, fill); }
inline Mask make_mask(int width, int height, std::uint8_t fill = 0) { return Mask(width, height, 1, fill); }

/// Quantizes to 8 bits and back; images exported to PNG go through this.
ImageRGB quantize_8bit(const ImageRGB& image);

/// Luma with 0.299 / 0.587 / 0.114 weights.
ScalarMap to_luma(const ImageRGB& image);

}  // namespace vipnerf
