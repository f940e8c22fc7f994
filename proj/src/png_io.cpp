// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace vipnerf {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

void write_png(const std::string& path, const RawPng& raw) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialisation failed for " + path);
  }
  const size_t bytes_per_sample = raw.bit_depth == 16 ? 2 : 1;
  const size_t row_bytes = static_cast<size_t>(raw.width) * raw.channels * bytes_per_sample;
  std::vector<png_byte> buffer(row_bytes * raw.height);
  for (size_t i = 0; i < raw.samples.size(); ++i) {
    if (bytes_per_sample == 2) {
      buffer[2 * i] = static_cast<png_byte>(raw.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(raw.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(raw.samples[i]);
    }
  }
  std::vector<png_bytep> rows(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + y * row_bytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng write error for " + path);
  }
  png_init_io(png, file.get());
  const int color_type = raw.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, raw.width, raw.height, raw.bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RawPng read_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialisation failed for " + path);
  }
  RawPng raw;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng read error for " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && raw.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  raw.channels = png_get_channels(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const size_t count = static_cast<size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(count);
  for (size_t i = 0; i < count; ++i) {
    raw.samples[i] = raw.bit_depth == 16 ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                                         : buffer[i];
  }
  return raw;
}

std::uint16_t to_byte(double v) { return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_rgb_png(const std::string& path, const ImageRGB& image) {
  if (image.channels() != 3) throw ShapeError("write_rgb_png expects 3 channels");
  RawPng raw{image.width(), image.height(), 3, 8, {}};
  raw.samples.resize(image.data().size());
  std::transform(image.data().begin(), image.data().end(), raw.samples.begin(), to_byte);
  write_png(path, raw);
}

ImageRGB read_rgb_png(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 3 || raw.bit_depth != 8) throw DataError(path + ": expected 8-bit RGB");
  ImageRGB image = make_rgb(raw.width, raw.height);
  for (size_t i = 0; i < raw.samples.size(); ++i) image.data()[i] = raw.samples[i] / 255.0;
  return image;
}

void write_mask_png(const std::string& path, const Mask& mask) {
  RawPng raw{mask.width(), mask.height(), 1, 8, {}};
  raw.samples.resize(mask.data().size());
  std::transform(mask.data().begin(), mask.data().end(), raw.samples.begin(),
                 [](std::uint8_t v) -> std::uint16_t { return v ? 255 : 0; });
  write_png(path, raw);
}

Mask read_mask_png(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1) throw DataError(path + ": expected single-channel PNG");
  Mask mask = make_mask(raw.width, raw.height);
  for (size_t i = 0; i < raw.samples.size(); ++i) mask.data()[i] = raw.samples[i] ? 1 : 0;
  return mask;
}

void write_gray_png(const std::string& path, const ScalarMap& map) {
  RawPng raw{map.width(), map.height(), 1, 8, {}};
  raw.samples.resize(map.data().size());
  std::transform(map.data().begin(), map.data().end(), raw.samples.begin(), to_byte);
  write_png(path, raw);
}

ScalarMap read_gray_png(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1 || raw.bit_depth != 8) throw DataError(path + ": expected 8-bit grayscale");
  ScalarMap map = make_scalar_map(raw.width, raw.height);
  for (size_t i = 0; i < raw.samples.size(); ++i) map.data()[i] = raw.samples[i] / 255.0;
  return map;
}

void write_depth_png(const std::string& path, const ScalarMap& depth, double scale) {
  if (!(scale > 0.0)) throw UsageError("depth scale must be positive");
  RawPng raw{depth.width(), depth.height(), 1, 16, {}};
  raw.samples.resize(depth.data().size());
  for (size_t i = 0; i < raw.samples.size(); ++i) {
    const double q = std::round(depth.data()[i] / scale);
    raw.samples[i] = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
  }
  write_png(path, raw);
}

ScalarMap read_depth_png(const std::string& path, double scale) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1 || raw.bit_depth != 16) throw DataError(path + ": expected 16-bit grayscale");
  ScalarMap depth = make_scalar_map(raw.width, raw.height);
  for (size_t i = 0; i < raw.samples.size(); ++i) depth.data()[i] = raw.samples[i] * scale;
  return depth;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vipnerf
