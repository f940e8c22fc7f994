// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// File-level stages shared by the command-line tool and the tests.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vipnerf/dataset.hpp"
#include "vipnerf/metrics.hpp"
#include "vipnerf/train.hpp"

namespace vipnerf {

/// One prior per ordered pair of train views. Throws DataError for fewer
/// than 2 train views.
PriorSet compute_priors(const SceneDataset& dataset, int plane_count, double gamma);
void write_priors(const PriorSet& priors, const std::string& dir);
/// Every prior_<a>_<b>.png (with sidecar) in dir.
PriorSet load_priors(const std::string& dir);

/// Reads rgb/<id>.png and, when present, depth/<id>.png for every test view.
RenderedSet load_rendered_set(const std::string& dir, const SceneDataset& dataset);

/// Test-view image and depth metrics; prior precision/recall/F1 against the
/// dataset's ground-truth visibility when priors are given.
MetricsReport evaluate(const SceneDataset& dataset, const RenderedSet& rendered, const PriorSet* priors = nullptr);

struct AblationArm {
  std::string name;
  TrainConfig config;
};

/// "full", "no_sparse_depth" (sparse depth weight 0) and
/// "no_dense_visibility" (vip and visibility weights 0).
std::vector<AblationArm> ablation_arms(const TrainConfig& base);

struct AblationRow {
  std::string arm;
  std::vector<std::uint64_t> seeds;
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::vector<double> depth_rmse;
  std::vector<double> depth_srocc;
};

double median(std::vector<double> values);

/// Trains every arm once per seed and evaluates the held-out views.
std::vector<AblationRow> run_ablation(const SceneDataset& dataset, const PriorSet& priors,
                                      const std::vector<AblationArm>& arms, const std::vector<std::uint64_t>& seeds,
                                      int render_samples);

nlohmann::ordered_json ablation_table_json(const std::vector<AblationRow>& rows);

}  // namespace vipnerf
