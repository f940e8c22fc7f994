// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vipnerf/dataset.hpp"
#include "vipnerf/field.hpp"
#include "vipnerf/loss.hpp"
#include "vipnerf/optim.hpp"
#include "vipnerf/plane_sweep.hpp"
#include "vipnerf/render.hpp"

namespace vipnerf {

/// Keyed by (primary view, secondary view).
using PriorSet = std::map<std::pair<int, int>, VisibilityPriorMap>;

struct TrainConfig {
  std::int64_t total_iterations = 2000;
  int rays_per_batch = 512;
  int samples_per_ray = 64;
  LossWeights weights;
  AdamConfig optimizer = {.decay_steps = 2000};
  /// L_vip switches on at floor(fraction * total_iterations).
  double vip_start_fraction = 0.4;
  std::int64_t checkpoint_interval = 500;
  std::uint64_t seed = 0;
  FieldConfig field;
  /// Extra rays per batch drawn from the primary view's sparse-depth keypoints.
  int sparse_rays_per_batch = 64;
  /// "none" or "psv": adds a dense depth term from the plane sweep argmin,
  /// weighted like the sparse depth term.
  std::string dense_depth_source = "none";

  std::int64_t vip_start_iteration() const;
  /// Throws UsageError describing the first invalid field.
  void validate() const;
};

/// Field names in the JSON mirror the struct; nested objects "weights",
/// "optimizer" and "field" mirror LossWeights (without vip_start_iteration),
/// AdamConfig and FieldConfig. Unknown keys are rejected.
nlohmann::ordered_json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LogRow {
  std::int64_t iteration = 0;
  double l_mse = 0.0;
  double l_sd = 0.0;
  double l_vip = 0.0;
  double l_v = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

std::string log_csv_header();
std::string log_csv_row(const LogRow& row);

struct TrainResult {
  RadianceField field;
  std::vector<LogRow> log;
};

struct TrainOptions {
  /// Checkpoint and CSV log go here; nothing is written when empty.
  std::string out_dir;
  std::function<void(const LogRow&)> on_iteration;
};

inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kLogFile = "train_log.csv";

/// Per-pixel depth from the plane sweep argmin, taking for each pixel the
/// secondary view with the lowest matching error.
DenseDepth psv_dense_depth_for_view(const SceneDataset& dataset, int primary, int plane_count = 64);

TrainResult train(const SceneDataset& dataset, const PriorSet& priors, const TrainConfig& config,
                  const TrainOptions& options = {});

struct RenderedSet {
  std::map<int, RenderedView> views;
  std::map<std::pair<int, int>, ScalarMap> visibility;
};

/// Full-frame colour and depth for every test view and t' maps for every
/// ordered train pair. Throws DataError when the checkpoint was trained on a
/// different resolution.
RenderedSet render_test_views(const RadianceField& field, const nlohmann::json& train_config,
                              const SceneDataset& dataset, int samples_per_ray);

/// rgb/<id>.png, depth/<id>.png + depth/<id>.json and visibility/<a>_<b>.png.
void write_rendered_set(const RenderedSet& set, const SceneDataset& dataset, const std::string& out_dir);

}  // namespace vipnerf
