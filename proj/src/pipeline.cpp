// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <regex>

#include "vipnerf/error.hpp"
#include "vipnerf/png_io.hpp"

namespace vipnerf {

namespace fs = std::filesystem;

PriorSet compute_priors(const SceneDataset& dataset, int plane_count, double gamma) {
  if (dataset.train_ids.size() < 2) {
    throw DataError("visibility priors need at least 2 train views, dataset has " +
                    std::to_string(dataset.train_ids.size()));
  }
  std::vector<ImageRGB> images;
  std::vector<Camera> cameras;
  for (int id : dataset.train_ids) {
    images.push_back(dataset.view(id).rgb);
    cameras.push_back(dataset.view(id).camera);
  }
  PriorSet set;
  for (auto& prior : prior_for_all_pairs(images, cameras, plane_count, gamma, dataset.train_ids)) {
    const auto key = std::make_pair(prior.primary_view, prior.secondary_view);
    set.emplace(key, std::move(prior));
  }
  return set;
}

void write_priors(const PriorSet& priors, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
  for (const auto& [key, prior] : priors) write_prior(prior, dir);
}

PriorSet load_priors(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("prior directory " + dir + " does not exist");
  static const std::regex pattern(R"(prior_(\d+)_(\d+)\.png)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (std::regex_match(entry.path().filename().string(), pattern)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  PriorSet set;
  for (const auto& f : files) {
    VisibilityPriorMap prior = read_prior(f.string());
    const auto key = std::make_pair(prior.primary_view, prior.secondary_view);
    set.emplace(key, std::move(prior));
  }
  return set;
}

RenderedSet load_rendered_set(const std::string& dir, const SceneDataset& dataset) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw DataError("render directory " + dir + " does not exist");
  RenderedSet set;
  for (int id : dataset.test_ids) {
    const std::string name = std::to_string(id);
    RenderedView view;
    view.color = read_rgb_png((root / "rgb" / (name + ".png")).string());
    const fs::path depth = root / "depth" / (name + ".png");
    if (fs::exists(depth)) {
      const std::string meta = read_text_file((root / "depth" / (name + ".json")).string());
      double scale = 0.0;
      try {
        scale = nlohmann::json::parse(meta).at("scale").get<double>();
      } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed depth sidecar for view " + name + ": " + e.what());
      }
      view.depth = read_depth_png(depth.string(), scale);
    }
    set.views.emplace(id, std::move(view));
  }
  return set;
}

MetricsReport evaluate(const SceneDataset& dataset, const RenderedSet& rendered, const PriorSet* priors) {
  MetricsReport report;
  for (int id : dataset.test_ids) {
    const auto found = rendered.views.find(id);
    if (found == rendered.views.end()) throw DataError("no rendering for test view " + std::to_string(id));
    const DatasetView& ref = dataset.view(id);
    ViewMetrics m;
    m.view = id;
    m.psnr = psnr(found->second.color, ref.rgb);
    m.ssim = ssim(found->second.color, ref.rgb);
    if (!found->second.depth.empty() && !ref.depth.empty()) m.depth = depth_rmse_srocc(found->second.depth, ref.depth);
    report.views.push_back(m);
  }
  if (priors) {
    for (const auto& [key, prior] : *priors) {
      const auto gt = dataset.visibility.find(key);
      if (gt == dataset.visibility.end()) {
        throw DataError("no ground-truth visibility for pair " + prior_stem(key.first, key.second));
      }
      report.pairs.push_back({key.first, key.second, prior_prf(prior.tau, gt->second)});
    }
  }
  return report;
}

std::vector<AblationArm> ablation_arms(const TrainConfig& base) {
  std::vector<AblationArm> arms;
  arms.push_back({"full", base});
  AblationArm no_sd{"no_sparse_depth", base};
  no_sd.config.weights.sparse_depth = 0.0;
  arms.push_back(no_sd);
  AblationArm no_vis{"no_dense_visibility", base};
  no_vis.config.weights.vip = 0.0;
  no_vis.config.weights.visibility = 0.0;
  arms.push_back(no_vis);
  return arms;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty set");
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<AblationRow> run_ablation(const SceneDataset& dataset, const PriorSet& priors,
                                      const std::vector<AblationArm>& arms, const std::vector<std::uint64_t>& seeds,
                                      int render_samples) {
  std::vector<AblationRow> rows;
  for (const auto& arm : arms) {
    AblationRow row;
    row.arm = arm.name;
    for (std::uint64_t seed : seeds) {
      TrainConfig config = arm.config;
      config.seed = seed;
      const TrainResult trained = train(dataset, priors, config);
      nlohmann::json meta;
      const RenderedSet rendered = render_test_views(trained.field, meta, dataset, render_samples);
      const MetricsReport report = evaluate(dataset, rendered);
      const PsnrResult p = report.mean_psnr();
      row.seeds.push_back(seed);
      row.psnr.push_back(p.db);
      row.ssim.push_back(report.mean_ssim());
      const auto depth = report.mean_depth();
      row.depth_rmse.push_back(depth ? depth->rmse : 0.0);
      row.depth_srocc.push_back(depth ? depth->srocc : 0.0);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json ablation_table_json(const std::vector<AblationRow>& rows) {
  nlohmann::ordered_json j;
  auto& list = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json e;
    e["arm"] = r.arm;
    e["seeds"] = r.seeds;
    e["psnr_median"] = median(r.psnr);
    e["ssim_median"] = median(r.ssim);
    e["depth_rmse_median"] = median(r.depth_rmse);
    e["depth_srocc_median"] = median(r.depth_srocc);
    e["psnr"] = r.psnr;
    e["ssim"] = r.ssim;
    e["depth_rmse"] = r.depth_rmse;
    e["depth_srocc"] = r.depth_srocc;
    list.push_back(std::move(e));
  }
  return j;
}

}  // namespace vipnerf
