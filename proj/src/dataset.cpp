// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <tuple>

#include "vipnerf/png_io.hpp"

namespace vipnerf {

namespace fs = std::filesystem;

namespace {

nlohmann::json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path.string());
  try {
    return nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string vis_name(int a, int b) { return std::to_string(a) + "_" + std::to_string(b) + ".png"; }

}  // namespace

const DatasetView& SceneDataset::view(int id) const {
  for (const auto& v : views) {
    if (v.id == id) return v;
  }
  throw DataError("dataset has no view with id " + std::to_string(id));
}

nlohmann::ordered_json camera_to_json(int id, const Camera& cam) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["width"] = cam.width();
  j["height"] = cam.height();
  std::vector<double> k(9);
  std::vector<double> pose(16);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) k[r * 3 + c] = cam.intrinsics()(r, c);
  }
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) pose[r * 4 + c] = cam.world_from_camera()(r, c);
  }
  j["intrinsics"] = k;
  j["world_from_camera"] = pose;
  j["z_min"] = cam.z_min();
  j["z_max"] = cam.z_max();
  return j;
}

Camera camera_from_json(const nlohmann::json& j) {
  try {
    const auto k = j.at("intrinsics").get<std::vector<double>>();
    const auto pose = j.at("world_from_camera").get<std::vector<double>>();
    if (k.size() != 9 || pose.size() != 16) throw DataError("camera entry needs 9 intrinsics and 16 pose values");
    Mat3 km;
    Mat4 pm;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) km(r, c) = k[r * 3 + c];
    }
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) pm(r, c) = pose[r * 4 + c];
    }
    return Camera(km, pm, j.at("z_min").get<double>(), j.at("z_max").get<double>(), j.at("width").get<int>(),
                  j.at("height").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed camera entry: ") + e.what());
  } catch (const GeometryError& e) {
    throw DataError(std::string("invalid camera entry: ") + e.what());
  }
}

std::map<int, std::vector<SparseDepthSample>> sample_sparse_depth(const ScenePreset& preset,
                                                                  const std::vector<ImageRGB>& images,
                                                                  const std::vector<ScalarMap>& depths, int k,
                                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<int, std::vector<SparseDepthSample>> out;
  for (int id : preset.train_ids) {
    const Camera& cam = preset.cameras[id];
    const ScalarMap luma = to_luma(images[id]);
    Mask seen_elsewhere = make_mask(cam.width(), cam.height());
    for (int other : preset.train_ids) {
      if (other == id) continue;
      const Mask vis = ground_truth_visibility(preset.scene, cam, preset.cameras[other]);
      for (size_t i = 0; i < vis.data().size(); ++i) seen_elsewhere.data()[i] |= vis.data()[i];
    }
    std::vector<SparseDepthSample> candidates;
    for (int y = 1; y + 1 < cam.height(); ++y) {
      for (int x = 1; x + 1 < cam.width(); ++x) {
        const double gx = 0.5 * (luma(x + 1, y) - luma(x - 1, y));
        const double gy = 0.5 * (luma(x, y + 1) - luma(x, y - 1));
        if (seen_elsewhere(x, y) && std::hypot(gx, gy) * 255.0 > 4.0) {
          candidates.push_back({x, y, depths[id](x, y)});
        }
      }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
    out[id] = std::move(candidates);
  }
  return out;
}

SceneDataset export_dataset(const ScenePreset& preset, int sparse_per_view, std::uint64_t seed,
                            const std::string& out_dir) {
  const fs::path root(out_dir);
  for (const char* sub : {"rgb", "depth", "vis"}) ensure_dir(root / sub);

  SceneDataset ds;
  ds.train_ids = preset.train_ids;
  ds.test_ids = preset.test_ids;
  std::vector<ImageRGB> images;
  std::vector<ScalarMap> depths;
  nlohmann::ordered_json cameras;
  cameras["views"] = nlohmann::ordered_json::array();
  for (size_t id = 0; id < preset.cameras.size(); ++id) {
    const Camera& cam = preset.cameras[id];
    GroundTruth gt = raycast_ground_truth(preset.scene, cam);
    gt.image = quantize_8bit(gt.image);
    const double scale = cam.z_max() / 65535.0;
    write_rgb_png((root / "rgb" / (std::to_string(id) + ".png")).string(), gt.image);
    write_depth_png((root / "depth" / (std::to_string(id) + ".png")).string(), gt.depth, scale);
    // keep exactly what a later load reads back
    ScalarMap stored = gt.depth;
    for (double& d : stored.data()) d = std::clamp(std::round(d / scale), 0.0, 65535.0) * scale;
    nlohmann::ordered_json meta;
    meta["scale"] = scale;
    write_text_file((root / "depth" / (std::to_string(id) + ".json")).string(), meta.dump(2) + "\n");
    cameras["views"].push_back(camera_to_json(static_cast<int>(id), cam));
    images.push_back(gt.image);
    depths.push_back(gt.depth);
    ds.views.push_back({static_cast<int>(id), cam, gt.image, std::move(stored)});
  }
  write_text_file((root / "cameras.json").string(), cameras.dump(2) + "\n");

  for (int a : preset.train_ids) {
    for (int b : preset.train_ids) {
      if (a == b) continue;
      Mask vis = ground_truth_visibility(preset.scene, preset.cameras[a], preset.cameras[b]);
      write_mask_png((root / "vis" / vis_name(a, b)).string(), vis);
      ds.visibility[{a, b}] = std::move(vis);
    }
  }

  ds.sparse_depth = sample_sparse_depth(preset, images, depths, sparse_per_view, seed);
  nlohmann::ordered_json sparse = nlohmann::ordered_json::object();
  for (const auto& [id, samples] : ds.sparse_depth) {
    auto& list = sparse[std::to_string(id)] = nlohmann::ordered_json::array();
    for (const auto& s : samples) list.push_back({{"x", s.x}, {"y", s.y}, {"depth", s.depth}});
  }
  write_text_file((root / "sparse_depth.json").string(), sparse.dump(2) + "\n");

  nlohmann::ordered_json split;
  split["train"] = preset.train_ids;
  split["test"] = preset.test_ids;
  write_text_file((root / "split.json").string(), split.dump(2) + "\n");
  return ds;
}

SceneDataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw DataError("dataset directory " + dir + " does not exist");
  SceneDataset ds;
  const nlohmann::json cameras = parse_json_file(root / "cameras.json");
  const nlohmann::json split = parse_json_file(root / "split.json");
  try {
    ds.train_ids = split.at("train").get<std::vector<int>>();
    ds.test_ids = split.at("test").get<std::vector<int>>();
    for (const auto& entry : cameras.at("views")) {
      const int id = entry.at("id").get<int>();
      Camera cam = camera_from_json(entry);
      const fs::path rgb_path = root / "rgb" / (std::to_string(id) + ".png");
      const fs::path depth_path = root / "depth" / (std::to_string(id) + ".png");
      ImageRGB rgb = read_rgb_png(rgb_path.string());
      if (rgb.width() != cam.width() || rgb.height() != cam.height()) {
        throw DataError(rgb_path.string() + ": resolution does not match cameras.json");
      }
      ScalarMap depth;
      if (fs::exists(depth_path)) {
        const double scale =
            parse_json_file(root / "depth" / (std::to_string(id) + ".json")).at("scale").get<double>();
        depth = read_depth_png(depth_path.string(), scale);
      }
      ds.views.push_back({id, std::move(cam), std::move(rgb), std::move(depth)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset metadata in " + dir + ": " + e.what());
  }
  std::sort(ds.views.begin(), ds.views.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (ds.views.size() < 2) throw DataError(dir + ": dataset needs at least 2 cameras");
  for (int id : ds.train_ids) ds.view(id);
  for (int id : ds.test_ids) ds.view(id);

  const fs::path sparse_path = root / "sparse_depth.json";
  if (fs::exists(sparse_path)) {
    const nlohmann::json sparse = parse_json_file(sparse_path);
    for (const auto& [key, list] : sparse.items()) {
      if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos) {
        throw DataError(sparse_path.string() + ": view key '" + key + "' is not a view id");
      }
      const int id = std::stoi(key);
      const Camera& cam = ds.view(id).camera;
      auto& out = ds.sparse_depth[id];
      for (const auto& s : list) {
        SparseDepthSample sample;
        try {
          sample = {s.at("x").get<int>(), s.at("y").get<int>(), s.at("depth").get<double>()};
        } catch (const nlohmann::json::exception& e) {
          throw DataError(sparse_path.string() + ": malformed entry: " + e.what());
        }
        if (sample.x < 0 || sample.y < 0 || sample.x >= cam.width() || sample.y >= cam.height()) {
          throw DataError("sparse depth for view " + key + " lies outside the image");
        }
        if (sample.depth < cam.z_min() || sample.depth > cam.z_max()) {
          throw DataError("sparse depth for view " + key + " outside camera bounds");
        }
        out.push_back(sample);
      }
    }
  }
  for (int a : ds.train_ids) {
    for (int b : ds.train_ids) {
      const fs::path p = root / "vis" / vis_name(a, b);
      if (a != b && fs::exists(p)) ds.visibility[{a, b}] = read_mask_png(p.string());
    }
  }
  return ds;
}

}  // namespace vipnerf
