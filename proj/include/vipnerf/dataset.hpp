// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vipnerf/geometry.hpp"
#include "vipnerf/image.hpp"
#include "vipnerf/loss.hpp"
#include "vipnerf/scene.hpp"

namespace vipnerf {

struct DatasetView {
  int id = -1;
  Camera camera;
  ImageRGB rgb;
  ScalarMap depth;
};

/// In-memory form of the on-disk layout:
///   rgb/<id>.png, depth/<id>.png + depth/<id>.json {"scale"},
///   vis/<a>_<b>.png (ground-truth visibility for ordered train pairs),
///   cameras.json, sparse_depth.json, split.json
struct SceneDataset {
  std::vector<DatasetView> views;  // sorted by id
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::map<int, std::vector<SparseDepthSample>> sparse_depth;
  std::map<std::pair<int, int>, Mask> visibility;

  const DatasetView& view(int id) const;
};

nlohmann::ordered_json camera_to_json(int id, const Camera& cam);
Camera camera_from_json(const nlohmann::json& j);

/// Sparse-depth keypoints: up to k pixels per train view, drawn uniformly from
/// pixels with a strong local luma gradient that the oracle marks visible in
/// another train view.
std::map<int, std::vector<SparseDepthSample>> sample_sparse_depth(const ScenePreset& preset,
                                                                  const std::vector<ImageRGB>& images,
                                                                  const std::vector<ScalarMap>& depths, int k,
                                                                  std::uint64_t seed);

/// Ray casts every view, samples sparse depth and writes the layout to out_dir.
SceneDataset export_dataset(const ScenePreset& preset, int sparse_per_view, std::uint64_t seed,
                            const std::string& out_dir);

SceneDataset load_dataset(const std::string& dir);

}  // namespace vipnerf
