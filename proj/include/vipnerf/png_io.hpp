// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "vipnerf/image.hpp"

namespace vipnerf {

// All readers and writers throw DataError naming the path on failure.

/// 8-bit RGB; values are clamped to [0, 1] and rounded.
void write_rgb_png(const std::string& path, const ImageRGB& image);
ImageRGB read_rgb_png(const std::string& path);

/// 8-bit single channel, 0 -> 0 and nonzero -> 255.
void write_mask_png(const std::string& path, const Mask& mask);
/// Any nonzero sample reads back as 1.
Mask read_mask_png(const std::string& path);

/// 8-bit single channel from values in [0, 1].
void write_gray_png(const std::string& path, const ScalarMap& map);
ScalarMap read_gray_png(const std::string& path);

/// 16-bit single channel storing round(value / scale).
void write_depth_png(const std::string& path, const ScalarMap& depth, double scale);
ScalarMap read_depth_png(const std::string& path, double scale);

/// Writes via a temporary file and rename.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace vipnerf
