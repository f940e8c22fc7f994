// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vipnerf/dataset.hpp"
#include "vipnerf/error.hpp"
#include "vipnerf/png_io.hpp"

using namespace vipnerf;
namespace fs = std::filesystem;

namespace {

void expect_same_camera(const Camera& a, const Camera& b) {
  EXPECT_TRUE(a.intrinsics() == b.intrinsics());
  EXPECT_TRUE(a.world_from_camera() == b.world_from_camera());
  EXPECT_EQ(a.z_min(), b.z_min());
  EXPECT_EQ(a.z_max(), b.z_max());
  EXPECT_EQ(a.width(), b.width());
  EXPECT_EQ(a.height(), b.height());
}

}  // namespace

TEST(Dataset, ExportLoadRoundTripIsBitExact) {
  const auto dir = vipnerf::testing::scratch_dir("dataset_roundtrip");
  const ScenePreset preset = make_preset("arc", 3, 4, 24);
  const SceneDataset exported = export_dataset(preset, 30, 5, dir.string());
  const SceneDataset loaded = load_dataset(dir.string());
  EXPECT_EQ(loaded.train_ids, exported.train_ids);
  EXPECT_EQ(loaded.test_ids, exported.test_ids);
  ASSERT_EQ(loaded.views.size(), exported.views.size());
  for (size_t i = 0; i < loaded.views.size(); ++i) {
    EXPECT_EQ(loaded.views[i].id, exported.views[i].id);
    expect_same_camera(loaded.views[i].camera, exported.views[i].camera);
    EXPECT_TRUE(loaded.views[i].rgb == exported.views[i].rgb);
    EXPECT_TRUE(loaded.views[i].depth == exported.views[i].depth);
  }
  ASSERT_EQ(loaded.sparse_depth.size(), exported.sparse_depth.size());
  for (const auto& [id, samples] : exported.sparse_depth) {
    const auto& back = loaded.sparse_depth.at(id);
    ASSERT_EQ(back.size(), samples.size());
    for (size_t k = 0; k < samples.size(); ++k) {
      EXPECT_EQ(back[k].x, samples[k].x);
      EXPECT_EQ(back[k].y, samples[k].y);
      EXPECT_EQ(back[k].depth, samples[k].depth);
    }
  }
  EXPECT_EQ(loaded.visibility.size(), 6u);
  for (const auto& [key, mask] : exported.visibility) EXPECT_TRUE(loaded.visibility.at(key) == mask);
}

TEST(Dataset, DepthWithinSixteenBitQuantisation) {
  const auto dir = vipnerf::testing::scratch_dir("dataset_depth");
  const ScenePreset preset = make_preset("sphere-box", 2, 1, 32);
  const SceneDataset ds = export_dataset(preset, 10, 1, dir.string());
  for (const auto& v : ds.views) {
    const GroundTruth gt = raycast_ground_truth(preset.scene, v.camera);
    const double step = v.camera.z_max() / 65535.0;
    for (size_t i = 0; i < gt.depth.data().size(); ++i) {
      EXPECT_LE(std::abs(v.depth.data()[i] - gt.depth.data()[i]), 0.5 * step + 1e-12);
    }
  }
}

TEST(Dataset, LayoutAndTwoViewSplitShape) {
  const auto dir = vipnerf::testing::scratch_dir("dataset_layout");
  const SceneDataset ds = export_dataset(make_preset("sphere-box", 2, 45, 16), 20, 0, dir.string());
  EXPECT_EQ(ds.train_ids.size(), 2u);
  EXPECT_EQ(ds.test_ids.size(), 45u);
  for (const char* f : {"cameras.json", "sparse_depth.json", "split.json", "rgb/0.png", "depth/0.png", "depth/0.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const int a = ds.train_ids[0];
  const int b = ds.train_ids[1];
  EXPECT_TRUE(fs::exists(dir / "vis" / (std::to_string(a) + "_" + std::to_string(b) + ".png")));
  EXPECT_TRUE(fs::exists(dir / "vis" / (std::to_string(b) + "_" + std::to_string(a) + ".png")));
}

TEST(Dataset, SparseDepthIsTexturedInBoundsAndSeeded) {
  const auto dir = vipnerf::testing::scratch_dir("dataset_sparse");
  const ScenePreset preset = make_preset("sphere-box", 2, 0, 64);
  const SceneDataset a = export_dataset(preset, 200, 3, dir.string());
  const SceneDataset b = export_dataset(preset, 200, 3, dir.string());
  for (int id : preset.train_ids) {
    const auto& samples = a.sparse_depth.at(id);
    EXPECT_EQ(samples.size(), 200u);
    const Camera& cam = preset.cameras[id];
    for (const auto& s : samples) {
      EXPECT_GE(s.depth, cam.z_min());
      EXPECT_LE(s.depth, cam.z_max());
    }
    ASSERT_EQ(b.sparse_depth.at(id).size(), samples.size());
    for (size_t k = 0; k < samples.size(); ++k) EXPECT_EQ(b.sparse_depth.at(id)[k].x, samples[k].x);
  }
  EXPECT_FALSE(a.sparse_depth.contains(-1));
}

TEST(Dataset, CameraJsonRoundTripAndValidation) {
  const Camera cam = make_preset("arc", 2, 1, 32).cameras[2];
  const auto j = camera_to_json(7, cam);
  EXPECT_EQ(j.at("id").get<int>(), 7);
  EXPECT_EQ(j.at("intrinsics").size(), 9u);
  EXPECT_EQ(j.at("world_from_camera").size(), 16u);
  expect_same_camera(camera_from_json(nlohmann::json::parse(j.dump())), cam);
  auto bad = nlohmann::json::parse(j.dump());
  bad["z_min"] = -1.0;
  EXPECT_THROW(camera_from_json(bad), DataError);
  bad = nlohmann::json::parse(j.dump());
  bad.erase("intrinsics");
  EXPECT_THROW(camera_from_json(bad), DataError);
}

TEST(Dataset, LoadErrorsNameTheProblem) {
  EXPECT_THROW(load_dataset("/nonexistent/vipnerf"), DataError);

  const auto dir = vipnerf::testing::scratch_dir("dataset_errors");
  const SceneDataset ds = export_dataset(make_preset("sphere-box", 2, 1, 16), 5, 0, dir.string());
  const int id = ds.train_ids[0];

  write_text_file((dir / "sparse_depth.json").string(),
                  "{\"" + std::to_string(id) + "\": [{\"x\": 1, \"y\": 1, \"depth\": 100.0}]}");
  EXPECT_THROW(load_dataset(dir.string()), DataError);
  write_text_file((dir / "sparse_depth.json").string(), "{\"abc\": []}");
  EXPECT_THROW(load_dataset(dir.string()), DataError);
  write_text_file((dir / "sparse_depth.json").string(), "{}");
  EXPECT_NO_THROW(load_dataset(dir.string()));

  write_rgb_png((dir / "rgb" / (std::to_string(id) + ".png")).string(), make_rgb(8, 8));
  try {
    load_dataset(dir.string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("resolution"), std::string::npos) << e.what();
  }

  write_text_file((dir / "split.json").string(), "{\"train\": [0, 99], \"test\": []}");
  EXPECT_THROW(load_dataset(dir.string()), DataError);
  write_text_file((dir / "cameras.json").string(), "{not json");
  EXPECT_THROW(load_dataset(dir.string()), DataError);
}

TEST(Dataset, UnknownViewIdThrows) {
  SceneDataset ds;
  EXPECT_THROW(ds.view(3), DataError);
}
