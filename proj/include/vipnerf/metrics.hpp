// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vipnerf/image.hpp"

namespace vipnerf {

struct PsnrResult {
  double db = 0.0;  // +inf when infinite
  bool infinite = false;
};

/// 10 log10(1 / MSE) over all pixels and channels.
PsnrResult psnr(const ImageRGB& a, const ImageRGB& b);

/// Single-channel SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, averaged over window centres that keep the
/// whole window inside the image.
double ssim_gray(const ScalarMap& a, const ScalarMap& b);
/// SSIM of the luma channels.
double ssim(const ImageRGB& a, const ImageRGB& b);

/// 1-based ranks with ties replaced by the mean of the tied positions.
std::vector<double> midranks(std::span<const double> values);
/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

struct DepthScores {
  double rmse = 0.0;
  double srocc = 0.0;
  size_t valid_pixels = 0;
};

/// RMSE and SROCC over pixels where `valid` is nonzero (all pixels when null).
DepthScores depth_rmse_srocc(const ScalarMap& pred, const ScalarMap& ref, const Mask* valid = nullptr);

struct PriorScores {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision;  // empty when nothing is predicted visible
  std::optional<double> recall;     // empty when the reference has no visible pixel
  std::optional<double> f1;

  static PriorScores from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
};

PriorScores prior_prf(const Mask& predicted, const Mask& reference);

struct ViewMetrics {
  int view = -1;
  PsnrResult psnr;
  double ssim = 0.0;
  std::optional<DepthScores> depth;
};

struct PairMetrics {
  int primary = -1;
  int secondary = -1;
  PriorScores scores;
};

struct MetricsReport {
  std::vector<ViewMetrics> views;
  std::vector<PairMetrics> pairs;

  /// Mean per-view PSNR; infinite when any view is.
  PsnrResult mean_psnr() const;
  double mean_ssim() const;
  std::optional<DepthScores> mean_depth() const;
  /// Pooled confusion counts over all pairs.
  std::optional<PriorScores> pooled_prior() const;

  nlohmann::ordered_json to_json() const;
};

}  // namespace vipnerf
