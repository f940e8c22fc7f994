// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "vipnerf/error.hpp"

namespace vipnerf {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  const int r = kWindow / 2;
  double total = 0.0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * kSigma * kSigma));
      w[(y + r) * kWindow + (x + r)] = v;
      total += v;
    }
  }
  for (double& v : w) v /= total;
  return w;
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json psnr_json(const PsnrResult& p) {
  return p.infinite ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p.db);
}

}  // namespace

PsnrResult psnr(const ImageRGB& a, const ImageRGB& b) {
  if (!a.same_shape(b)) throw ShapeError("psnr: image shapes differ");
  double sq = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.data().size());
  if (mse == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(1.0 / mse), false};
}

double ssim_gray(const ScalarMap& a, const ScalarMap& b) {
  if (!a.same_shape(b) || a.channels() != 1) throw ShapeError("ssim: inputs must be single-channel maps of equal size");
  if (a.width() < kWindow || a.height() < kWindow) throw ShapeError("ssim: image smaller than the 11x11 window");
  static const auto window = gaussian_window();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const int r = kWindow / 2;
  double total = 0.0;
  size_t count = 0;
  for (int cy = r; cy + r < a.height(); ++cy) {
    for (int cx = r; cx + r < a.width(); ++cx) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double w = window[(dy + r) * kWindow + (dx + r)];
          const double va = a(cx + dx, cy + dy);
          const double vb = b(cx + dx, cy + dy);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double ssim(const ImageRGB& a, const ImageRGB& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim: image shapes differ");
  return ssim_gray(to_luma(a), to_luma(b));
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("pearson: need two equal-length series of >= 2 values");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0, sbb = 0, sab = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = midranks(a);
  const auto rb = midranks(b);
  return pearson(ra, rb);
}

DepthScores depth_rmse_srocc(const ScalarMap& pred, const ScalarMap& ref, const Mask* valid) {
  if (!pred.same_shape(ref)) throw ShapeError("depth metrics: map shapes differ");
  if (valid && (valid->width() != pred.width() || valid->height() != pred.height())) {
    throw ShapeError("depth metrics: mask shape differs");
  }
  std::vector<double> p, r;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (valid && !(*valid)(x, y)) continue;
      p.push_back(pred(x, y));
      r.push_back(ref(x, y));
    }
  }
  if (p.size() < 2) throw DataError("depth metrics: fewer than 2 valid pixels");
  double sq = 0.0;
  for (size_t i = 0; i < p.size(); ++i) sq += (p[i] - r[i]) * (p[i] - r[i]);
  return {std::sqrt(sq / static_cast<double>(p.size())), spearman(p, r), p.size()};
}

PriorScores PriorScores::from_counts(size_t tp, size_t fp, size_t fn, size_t tn) {
  PriorScores s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.tn = tn;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision && s.recall) {
    const double denom = *s.precision + *s.recall;
    s.f1 = denom > 0.0 ? 2.0 * *s.precision * *s.recall / denom : 0.0;
  }
  return s;
}

PriorScores prior_prf(const Mask& predicted, const Mask& reference) {
  if (!predicted.same_shape(reference)) throw ShapeError("prior_prf: map shapes differ");
  size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < predicted.data().size(); ++i) {
    const bool p = predicted.data()[i] != 0;
    const bool r = reference.data()[i] != 0;
    tp += p && r;
    fp += p && !r;
    fn += !p && r;
    tn += !p && !r;
  }
  return PriorScores::from_counts(tp, fp, fn, tn);
}

PsnrResult MetricsReport::mean_psnr() const {
  if (views.empty()) throw DataError("metrics: no views evaluated");
  double sum = 0.0;
  for (const auto& v : views) {
    if (v.psnr.infinite) return {std::numeric_limits<double>::infinity(), true};
    sum += v.psnr.db;
  }
  return {sum / static_cast<double>(views.size()), false};
}

double MetricsReport::mean_ssim() const {
  if (views.empty()) throw DataError("metrics: no views evaluated");
  double sum = 0.0;
  for (const auto& v : views) sum += v.ssim;
  return sum / static_cast<double>(views.size());
}

std::optional<DepthScores> MetricsReport::mean_depth() const {
  DepthScores mean;
  size_t n = 0;
  for (const auto& v : views) {
    if (!v.depth) continue;
    mean.rmse += v.depth->rmse;
    mean.srocc += v.depth->srocc;
    mean.valid_pixels += v.depth->valid_pixels;
    ++n;
  }
  if (n == 0) return std::nullopt;
  mean.rmse /= static_cast<double>(n);
  mean.srocc /= static_cast<double>(n);
  return mean;
}

std::optional<PriorScores> MetricsReport::pooled_prior() const {
  if (pairs.empty()) return std::nullopt;
  size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& p : pairs) {
    tp += p.scores.tp;
    fp += p.scores.fp;
    fn += p.scores.fn;
    tn += p.scores.tn;
  }
  return PriorScores::from_counts(tp, fp, fn, tn);
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  const PsnrResult p = mean_psnr();
  j["psnr"] = psnr_json(p);
  j["psnr_infinite"] = p.infinite;
  j["ssim"] = mean_ssim();
  const auto depth = mean_depth();
  j["depth_rmse"] = depth ? nlohmann::ordered_json(depth->rmse) : nlohmann::ordered_json(nullptr);
  j["depth_srocc"] = depth ? nlohmann::ordered_json(depth->srocc) : nlohmann::ordered_json(nullptr);
  const auto prior = pooled_prior();
  j["prior_precision"] = prior ? optional_json(prior->precision) : nullptr;
  j["prior_recall"] = prior ? optional_json(prior->recall) : nullptr;
  j["prior_f1"] = prior ? optional_json(prior->f1) : nullptr;
  j["lpips"] = nullptr;
  auto& per_view = j["views"] = nlohmann::ordered_json::array();
  for (const auto& v : views) {
    nlohmann::ordered_json e;
    e["view"] = v.view;
    e["psnr"] = psnr_json(v.psnr);
    e["psnr_infinite"] = v.psnr.infinite;
    e["ssim"] = v.ssim;
    e["depth_rmse"] = v.depth ? nlohmann::ordered_json(v.depth->rmse) : nlohmann::ordered_json(nullptr);
    e["depth_srocc"] = v.depth ? nlohmann::ordered_json(v.depth->srocc) : nlohmann::ordered_json(nullptr);
    per_view.push_back(std::move(e));
  }
  auto& per_pair = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& pr : pairs) {
    nlohmann::ordered_json e;
    e["primary"] = pr.primary;
    e["secondary"] = pr.secondary;
    e["precision"] = optional_json(pr.scores.precision);
    e["recall"] = optional_json(pr.scores.recall);
    e["f1"] = optional_json(pr.scores.f1);
    e["tp"] = pr.scores.tp;
    e["fp"] = pr.scores.fp;
    e["fn"] = pr.scores.fn;
    e["tn"] = pr.scores.tn;
    per_pair.push_back(std::move(e));
  }
  return j;
}

}  // namespace vipnerf
