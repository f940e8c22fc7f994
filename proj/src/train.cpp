// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "vipnerf/checkpoint.hpp"
#include "vipnerf/error.hpp"
#include "vipnerf/png_io.hpp"

namespace vipnerf {

namespace fs = std::filesystem;

std::int64_t TrainConfig::vip_start_iteration() const {
  return static_cast<std::int64_t>(std::floor(vip_start_fraction * static_cast<double>(total_iterations)));
}

void TrainConfig::validate() const {
  if (total_iterations <= 0) throw UsageError("total_iterations must be positive");
  if (rays_per_batch <= 0) throw UsageError("rays_per_batch must be positive");
  if (samples_per_ray < 2) throw UsageError("samples_per_ray must be at least 2");
  if (!(vip_start_fraction >= 0.0 && vip_start_fraction <= 1.0)) {
    throw UsageError("vip_start_fraction must lie in [0, 1]");
  }
  for (double w : {weights.mse, weights.sparse_depth, weights.vip, weights.visibility}) {
    if (!(w >= 0.0)) throw UsageError("loss weights must be non-negative");
  }
  if (checkpoint_interval < 0) throw UsageError("checkpoint_interval must be non-negative");
  if (sparse_rays_per_batch < 0) throw UsageError("sparse_rays_per_batch must be non-negative");
  if (dense_depth_source != "none" && dense_depth_source != "psv") {
    throw UsageError("dense_depth_source must be \"none\" or \"psv\", got \"" + dense_depth_source + "\"");
  }
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw UsageError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["total_iterations"] = c.total_iterations;
  j["rays_per_batch"] = c.rays_per_batch;
  j["samples_per_ray"] = c.samples_per_ray;
  j["weights"] = {{"mse", c.weights.mse},
                  {"sparse_depth", c.weights.sparse_depth},
                  {"vip", c.weights.vip},
                  {"visibility", c.weights.visibility}};
  j["optimizer"] = {{"lr_init", c.optimizer.lr_init}, {"lr_final", c.optimizer.lr_final},
                    {"beta1", c.optimizer.beta1},     {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},         {"decay_steps", c.optimizer.decay_steps}};
  j["vip_start_fraction"] = c.vip_start_fraction;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["seed"] = c.seed;
  j["field"] = field_config_to_json(c.field);
  j["sparse_rays_per_batch"] = c.sparse_rays_per_batch;
  j["dense_depth_source"] = c.dense_depth_source;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    reject_unknown(j,
                   {"total_iterations", "rays_per_batch", "samples_per_ray", "weights", "optimizer",
                    "vip_start_fraction", "checkpoint_interval", "seed", "field", "sparse_rays_per_batch",
                    "dense_depth_source"},
                   "train config");
    read_field(j, "total_iterations", c.total_iterations);
    read_field(j, "rays_per_batch", c.rays_per_batch);
    read_field(j, "samples_per_ray", c.samples_per_ray);
    read_field(j, "vip_start_fraction", c.vip_start_fraction);
    read_field(j, "checkpoint_interval", c.checkpoint_interval);
    read_field(j, "seed", c.seed);
    read_field(j, "sparse_rays_per_batch", c.sparse_rays_per_batch);
    read_field(j, "dense_depth_source", c.dense_depth_source);
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      reject_unknown(w, {"mse", "sparse_depth", "vip", "visibility"}, "weights");
      read_field(w, "mse", c.weights.mse);
      read_field(w, "sparse_depth", c.weights.sparse_depth);
      read_field(w, "vip", c.weights.vip);
      read_field(w, "visibility", c.weights.visibility);
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      reject_unknown(o, {"lr_init", "lr_final", "beta1", "beta2", "eps", "decay_steps"}, "optimizer");
      read_field(o, "lr_init", c.optimizer.lr_init);
      read_field(o, "lr_final", c.optimizer.lr_final);
      read_field(o, "beta1", c.optimizer.beta1);
      read_field(o, "beta2", c.optimizer.beta2);
      read_field(o, "eps", c.optimizer.eps);
      read_field(o, "decay_steps", c.optimizer.decay_steps);
    }
    if (j.contains("field")) {
      reject_unknown(j.at("field"), {"width", "depth", "pos_freqs", "dir_freqs", "include_input"}, "field");
      c.field = field_config_from_json(j.at("field"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string log_csv_header() { return "iteration,l_mse,l_sd,l_vip,l_v,total,lr\n"; }

std::string log_csv_row(const LogRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.iteration),
                r.l_mse, r.l_sd, r.l_vip, r.l_v, r.total, r.lr);
  return buf;
}

DenseDepth psv_dense_depth_for_view(const SceneDataset& dataset, int primary, int plane_count) {
  const DatasetView& a = dataset.view(primary);
  const PlaneDepths planes = sample_plane_depths(a.camera.z_min(), a.camera.z_max(), plane_count);
  DenseDepth out{make_scalar_map(a.camera.width(), a.camera.height()),
                 make_mask(a.camera.width(), a.camera.height())};
  ScalarMap best = make_scalar_map(a.camera.width(), a.camera.height(), std::numeric_limits<double>::infinity());
  for (int other : dataset.train_ids) {
    if (other == primary) continue;
    const DatasetView& b = dataset.view(other);
    const PlaneSweepVolume psv = build_psv(a.rgb, a.camera, b.rgb, b.camera, planes);
    const DenseDepth d = psv_dense_depth(psv);
    for (int y = 0; y < psv.height(); ++y) {
      for (int x = 0; x < psv.width(); ++x) {
        if (d.valid(x, y) && psv.min_error(x, y) < best(x, y)) {
          best(x, y) = psv.min_error(x, y);
          out.depth(x, y) = d.depth(x, y);
          out.valid(x, y) = 1;
        }
      }
    }
  }
  return out;
}

namespace {

void validate_priors(const SceneDataset& dataset, const PriorSet& priors) {
  for (int a : dataset.train_ids) {
    for (int b : dataset.train_ids) {
      if (a == b) continue;
      const auto it = priors.find({a, b});
      if (it == priors.end()) {
        throw DataError("missing visibility prior for train pair (" + std::to_string(a) + ", " + std::to_string(b) +
                        ")");
      }
      const Camera& cam = dataset.view(a).camera;
      if (it->second.tau.width() != cam.width() || it->second.tau.height() != cam.height()) {
        throw DataError("visibility prior " + prior_stem(a, b) + " does not match the view resolution");
      }
    }
  }
}

nlohmann::json checkpoint_metadata(const TrainConfig& config, const SceneDataset& dataset) {
  nlohmann::ordered_json j;
  j["train"] = train_config_to_json(config);
  const Camera& cam = dataset.view(dataset.train_ids.front()).camera;
  j["resolution"] = {cam.width(), cam.height()};
  return j;
}

// Expected depth with the residual transmittance assigned to the far bound,
// matching the depth maps produced at render time.
ad::Tensor filled_depth(const RenderOutput& out, double z_max) {
  return out.depth + ad::scale(out.final_transmittance, z_max);
}

void write_outputs(const TrainOptions& options, const RadianceField& field, const Adam& adam, std::int64_t iteration,
                   const nlohmann::json& meta, const std::string& csv) {
  if (options.out_dir.empty()) return;
  save_checkpoint((fs::path(options.out_dir) / kCheckpointFile).string(), field, &adam, iteration, meta);
  write_text_file((fs::path(options.out_dir) / kLogFile).string(), csv);
}

}  // namespace

TrainResult train(const SceneDataset& dataset, const PriorSet& priors, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (dataset.train_ids.size() < 2) throw DataError("training needs at least 2 train views");
  LossWeights weights = config.weights;
  weights.vip_start_iteration = config.vip_start_iteration();
  const bool use_vip = weights.vip > 0.0;
  if (use_vip) validate_priors(dataset, priors);
  const bool use_sparse = weights.sparse_depth > 0.0 && config.sparse_rays_per_batch > 0;
  const bool use_dense = weights.sparse_depth > 0.0 && config.dense_depth_source == "psv";

  std::map<int, DenseDepth> dense;
  if (use_dense) {
    for (int id : dataset.train_ids) dense.emplace(id, psv_dense_depth_for_view(dataset, id));
  }
  if (!options.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw DataError("cannot create " + options.out_dir + ": " + ec.message());
  }

  TrainResult result{RadianceField(config.field, config.seed), {}};
  RadianceField& field = result.field;
  Adam adam(config.optimizer, field.parameters());
  const nlohmann::json meta = checkpoint_metadata(config, dataset);
  std::string csv = log_csv_header();

  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);
  const int train_count = static_cast<int>(dataset.train_ids.size());
  std::uniform_int_distribution<int> pick_view(0, train_count - 1);
  std::uniform_int_distribution<int> pick_other(0, train_count - 2);
  const size_t n = config.samples_per_ray;

  ad::Tape tape;
  for (std::int64_t it = 0; it < config.total_iterations; ++it) {
    tape.clear();
    ad::TapeScope scope(tape);
    const int pi = pick_view(rng);
    int si = pick_other(rng);
    if (si >= pi) ++si;
    const DatasetView& primary = dataset.view(dataset.train_ids[pi]);
    const DatasetView& secondary = dataset.view(dataset.train_ids[si]);
    const Camera& cam = primary.camera;

    std::uniform_int_distribution<int> px(0, cam.width() - 1);
    std::uniform_int_distribution<int> py(0, cam.height() - 1);
    std::vector<Ray> rays;
    std::vector<std::pair<int, int>> pixels;
    std::vector<double> target;
    for (int r = 0; r < config.rays_per_batch; ++r) {
      const int x = px(rng);
      const int y = py(rng);
      pixels.emplace_back(x, y);
      rays.push_back(ray_through_pixel(cam, Vec2(x, y)));
      for (int c = 0; c < 3; ++c) target.push_back(primary.rgb(x, y, c));
    }
    const RayBundle bundle = make_bundle(rays, cam.z_min(), cam.z_max(), config.samples_per_ray, &rng);
    const BundleRender render = render_bundle(field, bundle);
    const size_t rays_n = bundle.ray_count();

    LossComponents parts;
    parts.mse = loss_mse(render.output.color, ad::Tensor::from(std::move(target), rays_n, 3));
    parts.visibility =
        loss_vis_consistency(render.output.transmittance, ad::reshape(render.radiance.visibility, rays_n, n));

    if (use_vip && vip_active(weights, it)) {
      const VisibilityPriorMap& prior = priors.at({primary.id, secondary.id});
      std::vector<double> tau;
      for (const auto& [x, y] : pixels) tau.push_back(prior.tau(x, y) ? 1.0 : 0.0);
      const SecondaryVisibility vis =
          pixel_visibility_efficient(field, bundle, render.density.latent, render.output, secondary.camera);
      parts.vip = loss_vip(vis.pixel_visibility, ad::Tensor::from(std::move(tau), rays_n, 1));
    }

    if (use_sparse) {
      const auto found = dataset.sparse_depth.find(primary.id);
      if (found != dataset.sparse_depth.end() && !found->second.empty()) {
        const auto& keypoints = found->second;
        std::uniform_int_distribution<size_t> pick(0, keypoints.size() - 1);
        std::vector<Ray> sparse_rays;
        std::vector<double> sparse_target;
        for (int k = 0; k < config.sparse_rays_per_batch; ++k) {
          const SparseDepthSample& s = keypoints[pick(rng)];
          sparse_rays.push_back(ray_through_pixel(cam, Vec2(s.x, s.y)));
          sparse_target.push_back(s.depth);
        }
        const RayBundle sb = make_bundle(sparse_rays, cam.z_min(), cam.z_max(), config.samples_per_ray, &rng);
        const BundleRender sr = render_bundle(field, sb);
        parts.sparse_depth =
            loss_sparse_depth(filled_depth(sr.output, cam.z_max()), ad::Tensor::from(std::move(sparse_target), sb.ray_count(), 1));
      }
    }
    if (use_dense) {
      const DenseDepth& d = dense.at(primary.id);
      std::vector<double> mask;
      std::vector<double> depth;
      double count = 0.0;
      for (const auto& [x, y] : pixels) {
        mask.push_back(d.valid(x, y) ? 1.0 : 0.0);
        depth.push_back(d.depth(x, y));
        count += mask.back();
      }
      if (count > 0.0) {
        const ad::Tensor err = ad::square(filled_depth(render.output, cam.z_max()) - ad::Tensor::from(std::move(depth), rays_n, 1));
        const ad::Tensor term = ad::scale(ad::sum(err * ad::Tensor::from(std::move(mask), rays_n, 1)), 1.0 / count);
        parts.sparse_depth = parts.sparse_depth.defined() ? parts.sparse_depth + term : term;
      }
    }

    const ad::Tensor total = total_loss(parts, weights, it);
    LogRow row;
    row.iteration = it;
    row.l_mse = parts.mse.item();
    row.l_sd = parts.sparse_depth.defined() ? parts.sparse_depth.item() : 0.0;
    row.l_vip = parts.vip.defined() ? parts.vip.item() : 0.0;
    row.l_v = parts.visibility.item();
    row.total = total.item();
    row.lr = adam.current_learning_rate();
    if (!std::isfinite(row.total)) throw NumericError("non-finite loss at iteration " + std::to_string(it));

    ad::backward(tape, total);
    adam.step();
    adam.zero_grad();

    csv += log_csv_row(row);
    result.log.push_back(row);
    if (options.on_iteration) options.on_iteration(row);
    const std::int64_t done = it + 1;
    if (config.checkpoint_interval > 0 && done % config.checkpoint_interval == 0 && done != config.total_iterations) {
      write_outputs(options, field, adam, done, meta, csv);
    }
  }
  tape.clear();
  write_outputs(options, field, adam, config.total_iterations, meta, csv);
  return result;
}

RenderedSet render_test_views(const RadianceField& field, const nlohmann::json& train_config,
                              const SceneDataset& dataset, int samples_per_ray) {
  if (train_config.contains("resolution")) {
    const auto res = train_config.at("resolution").get<std::vector<int>>();
    for (const auto& v : dataset.views) {
      if (res.size() != 2 || v.camera.width() != res[0] || v.camera.height() != res[1]) {
        throw DataError("checkpoint was trained at " + train_config.at("resolution").dump() + " but view " +
                        std::to_string(v.id) + " is " + std::to_string(v.camera.width()) + "x" +
                        std::to_string(v.camera.height()));
      }
    }
  }
  RenderedSet set;
  for (int id : dataset.test_ids) set.views.emplace(id, render_view(field, dataset.view(id).camera, samples_per_ray));
  for (int a : dataset.train_ids) {
    for (int b : dataset.train_ids) {
      if (a == b) continue;
      set.visibility.emplace(std::make_pair(a, b), render_visibility_map(field, dataset.view(a).camera,
                                                                         dataset.view(b).camera, samples_per_ray));
    }
  }
  return set;
}

void write_rendered_set(const RenderedSet& set, const SceneDataset& dataset, const std::string& out_dir) {
  const fs::path root(out_dir);
  for (const char* sub : {"rgb", "depth", "visibility"}) {
    std::error_code ec;
    fs::create_directories(root / sub, ec);
    if (ec) throw DataError("cannot create " + (root / sub).string() + ": " + ec.message());
  }
  for (const auto& [id, view] : set.views) {
    const double scale = dataset.view(id).camera.z_max() / 65535.0;
    write_rgb_png((root / "rgb" / (std::to_string(id) + ".png")).string(), view.color);
    write_depth_png((root / "depth" / (std::to_string(id) + ".png")).string(), view.depth, scale);
    nlohmann::ordered_json meta;
    meta["scale"] = scale;
    write_text_file((root / "depth" / (std::to_string(id) + ".json")).string(), meta.dump(2) + "\n");
  }
  for (const auto& [pair, map] : set.visibility) {
    write_gray_png(
        (root / "visibility" / (std::to_string(pair.first) + "_" + std::to_string(pair.second) + ".png")).string(),
        map);
  }
}

}  // namespace vipnerf
