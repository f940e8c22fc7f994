// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/plane_sweep.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "vipnerf/png_io.hpp"

namespace vipnerf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <bool Parallel>
PlaneSweepVolume build_impl(const ImageRGB& primary_image, const Camera& primary_cam,
                            const ImageRGB& secondary_image, const Camera& secondary_cam,
                            const PlaneDepths& planes) {
  if (primary_image.width() != primary_cam.width() || primary_image.height() != primary_cam.height()) {
    throw ShapeError("build_psv: primary image resolution does not match its camera");
  }
  if (secondary_image.width() != secondary_cam.width() || secondary_image.height() != secondary_cam.height()) {
    throw ShapeError("build_psv: secondary image resolution does not match its camera");
  }
  if (planes.count() == 0) throw UsageError("build_psv: no planes");
  const int w = primary_cam.width();
  const int h = primary_cam.height();
  const int d = static_cast<int>(planes.count());

  PlaneSweepVolume psv;
  psv.planes = planes;
  psv.warped.resize(d);
  psv.valid.resize(d);
  psv.error_maps.assign(d, make_scalar_map(w, h, kInf));

  const auto one_plane = [&](int k) {
    WarpResult warp = Parallel ? warp_at_depth(primary_cam, secondary_cam, secondary_image, planes.depths[k])
                               : warp_at_depth_reference(primary_cam, secondary_cam, secondary_image,
                                                         planes.depths[k]);
    ScalarMap& err = psv.error_maps[k];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!warp.valid(x, y)) continue;
        double e = 0.0;
        for (int c = 0; c < 3; ++c) e += std::abs(primary_image(x, y, c) - warp.warped(x, y, c)) * 255.0;
        err(x, y) = e;
      }
    }
    psv.warped[k] = std::move(warp.warped);
    psv.valid[k] = std::move(warp.valid);
  };

  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < d; ++k) one_plane(k);
  } else {
    for (int k = 0; k < d; ++k) one_plane(k);
  }

  psv.min_error = make_scalar_map(w, h, kInf);
  psv.argmin_plane = Raster<int>(w, h, 1, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < d; ++k) {
        const double e = psv.error_maps[k](x, y);
        // strict < keeps the nearest plane on ties
        if (psv.valid[k](x, y) && e < psv.min_error(x, y)) {
          psv.min_error(x, y) = e;
          psv.argmin_plane(x, y) = k;
        }
      }
    }
  }
  return psv;
}

}  // namespace

PlaneDepths sample_plane_depths(double z_min, double z_max, int count) {
  if (!(z_min > 0.0) || !(z_min < z_max)) throw UsageError("plane depths: need 0 < z_min < z_max");
  if (count < 2) throw UsageError("plane depths: need at least 2 planes");
  PlaneDepths planes;
  planes.depths.resize(count);
  const double near_disp = 1.0 / z_min;
  const double far_disp = 1.0 / z_max;
  for (int k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / (count - 1);
    planes.depths[k] = 1.0 / (near_disp + t * (far_disp - near_disp));
  }
  planes.depths.front() = z_min;
  planes.depths.back() = z_max;
  return planes;
}

PlaneSweepVolume build_psv(const ImageRGB& primary_image, const Camera& primary_cam, const ImageRGB& secondary_image,
                           const Camera& secondary_cam, const PlaneDepths& planes) {
  return build_impl<true>(primary_image, primary_cam, secondary_image, secondary_cam, planes);
}

PlaneSweepVolume build_psv_reference(const ImageRGB& primary_image, const Camera& primary_cam,
                                     const ImageRGB& secondary_image, const Camera& secondary_cam,
                                     const PlaneDepths& planes) {
  return build_impl<false>(primary_image, primary_cam, secondary_image, secondary_cam, planes);
}

VisibilityPriorMap visibility_prior(const PlaneSweepVolume& psv, double gamma) {
  if (!(gamma > 0.0)) throw UsageError("visibility prior: gamma must be > 0");
  VisibilityPriorMap prior;
  prior.gamma = gamma;
  prior.plane_count = static_cast<int>(psv.planes.count());
  prior.tau = make_mask(psv.width(), psv.height());
  for (int y = 0; y < psv.height(); ++y) {
    for (int x = 0; x < psv.width(); ++x) {
      if (!psv.matched(x, y)) continue;
      prior.tau(x, y) = std::exp(-psv.min_error(x, y) / gamma) > 0.5 ? 1 : 0;
    }
  }
  return prior;
}

DenseDepth psv_dense_depth(const PlaneSweepVolume& psv) {
  DenseDepth out{make_scalar_map(psv.width(), psv.height()), make_mask(psv.width(), psv.height())};
  for (int y = 0; y < psv.height(); ++y) {
    for (int x = 0; x < psv.width(); ++x) {
      const int k = psv.argmin_plane(x, y);
      if (k < 0) continue;
      out.depth(x, y) = psv.planes.depths[k];
      out.valid(x, y) = 1;
    }
  }
  return out;
}

std::vector<VisibilityPriorMap> prior_for_all_pairs(const std::vector<ImageRGB>& images,
                                                    const std::vector<Camera>& cameras, int plane_count,
                                                    double gamma, const std::vector<int>& view_ids) {
  if (images.size() != cameras.size()) throw ShapeError("prior_for_all_pairs: image and camera counts differ");
  if (images.size() < 2) throw DataError("visibility priors need at least 2 views, got " + std::to_string(images.size()));
  if (!view_ids.empty() && view_ids.size() != images.size()) throw ShapeError("prior_for_all_pairs: id count");
  std::vector<VisibilityPriorMap> priors;
  for (size_t a = 0; a < images.size(); ++a) {
    const PlaneDepths planes = sample_plane_depths(cameras[a].z_min(), cameras[a].z_max(), plane_count);
    for (size_t b = 0; b < images.size(); ++b) {
      if (a == b) continue;
      const auto psv = build_psv(images[a], cameras[a], images[b], cameras[b], planes);
      VisibilityPriorMap prior = visibility_prior(psv, gamma);
      prior.primary_view = view_ids.empty() ? static_cast<int>(a) : view_ids[a];
      prior.secondary_view = view_ids.empty() ? static_cast<int>(b) : view_ids[b];
      priors.push_back(std::move(prior));
    }
  }
  return priors;
}

std::string prior_stem(int primary_view, int secondary_view) {
  return "prior_" + std::to_string(primary_view) + "_" + std::to_string(secondary_view);
}

void write_prior(const VisibilityPriorMap& prior, const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  const std::string stem = prior_stem(prior.primary_view, prior.secondary_view);
  write_mask_png((dir / (stem + ".png")).string(), prior.tau);
  nlohmann::ordered_json meta;
  meta["primary_view"] = prior.primary_view;
  meta["secondary_view"] = prior.secondary_view;
  meta["gamma"] = prior.gamma;
  meta["D"] = prior.plane_count;
  write_text_file((dir / (stem + ".json")).string(), meta.dump(2) + "\n");
}

VisibilityPriorMap read_prior(const std::string& png_path) {
  namespace fs = std::filesystem;
  fs::path sidecar(png_path);
  sidecar.replace_extension(".json");
  std::ifstream in(sidecar);
  if (!in) throw DataError("cannot open prior sidecar " + sidecar.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const std::exception& e) {
    throw DataError("malformed prior sidecar " + sidecar.string() + ": " + e.what());
  }
  VisibilityPriorMap prior;
  prior.tau = read_mask_png(png_path);
  try {
    prior.primary_view = meta.at("primary_view").get<int>();
    prior.secondary_view = meta.at("secondary_view").get<int>();
    prior.gamma = meta.at("gamma").get<double>();
    prior.plane_count = meta.at("D").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed prior sidecar " + sidecar.string() + ": " + e.what());
  }
  return prior;
}

}  // namespace vipnerf
