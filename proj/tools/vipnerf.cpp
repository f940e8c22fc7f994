// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

// vipnerf: file-based pipeline driver.
//
//   vipnerf generate-scene --preset sphere-box --views 2 --out data
//   vipnerf compute-prior  --dataset data --out data/priors
//   vipnerf train          --dataset data --priors data/priors --out run
//   vipnerf render         --dataset data --checkpoint run/checkpoint.bin --out run/render
//   vipnerf evaluate       --dataset data --renders run/render --priors data/priors --out run
//   vipnerf ablate         --dataset data --priors data/priors --out ablation
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 numeric. Failures print a single line
// "error[<kind>]: <message>" on stderr.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vipnerf/checkpoint.hpp"
#include "vipnerf/dataset.hpp"
#include "vipnerf/error.hpp"
#include "vipnerf/pipeline.hpp"
#include "vipnerf/png_io.hpp"
#include "vipnerf/scene.hpp"
#include "vipnerf/train.hpp"

namespace fs = std::filesystem;
using namespace vipnerf;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Numeric: return kExitNumeric;
    default: return kExitData;
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
}

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw UsageError("malformed config " + path + ": " + e.what());
  }
  return train_config_from_json(j);
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text_file(path.string(), j.dump(2) + "\n"); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vipnerf: sparse-input radiance fields with visibility priors"};
  app.require_subcommand(1);

  struct {
    std::string preset = "sphere-box";
    int views = 2;
    int test_views = 45;
    int resolution = 64;
    int sparse_points = 200;
    std::uint64_t seed = 0;
    std::string out;
  } gen;
  auto* gen_cmd = app.add_subcommand("generate-scene", "Ray trace a preset scene into a dataset directory");
  gen_cmd->add_option("--preset", gen.preset, "sphere-box | lateral | arc")->capture_default_str();
  gen_cmd->add_option("--views", gen.views, "Number of training views")->capture_default_str();
  gen_cmd->add_option("--test-views", gen.test_views, "Number of held-out views")->capture_default_str();
  gen_cmd->add_option("--resolution", gen.resolution, "Square image size in pixels")->capture_default_str();
  gen_cmd->add_option("--sparse-points", gen.sparse_points, "Sparse depth keypoints per train view")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Seed for keypoint sampling")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();

  struct {
    std::string dataset;
    double gamma = 10.0;
    int planes = 64;
    std::string out;
  } prior;
  auto* prior_cmd = app.add_subcommand("compute-prior", "Plane-sweep visibility priors for every train pair");
  prior_cmd->add_option("--dataset", prior.dataset)->required();
  prior_cmd->add_option("--gamma", prior.gamma, "Error scale of the photoconsistency test")->capture_default_str();
  prior_cmd->add_option("--planes", prior.planes, "Number of sweep planes")->capture_default_str();
  prior_cmd->add_option("--out", prior.out, "Output directory for prior PNGs and sidecars")->required();

  struct {
    std::string dataset;
    std::string priors;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
  } tr;
  auto* train_cmd = app.add_subcommand("train", "Train a field; writes checkpoint.bin and train_log.csv");
  train_cmd->add_option("--dataset", tr.dataset)->required();
  train_cmd->add_option("--priors", tr.priors, "Prior directory (required when the vip weight is nonzero)");
  train_cmd->add_option("--config", tr.config, "JSON train config");
  train_cmd->add_option("--seed", tr.seed, "Overrides the config seed");
  train_cmd->add_option("--out", tr.out)->required();

  struct {
    std::string dataset;
    std::string checkpoint;
    int samples = 0;
    std::string out;
  } rd;
  auto* render_cmd = app.add_subcommand("render", "Render test views and per-pair visibility maps");
  render_cmd->add_option("--dataset", rd.dataset)->required();
  render_cmd->add_option("--checkpoint", rd.checkpoint)->required();
  render_cmd->add_option("--samples", rd.samples, "Samples per ray (default: training value)");
  render_cmd->add_option("--out", rd.out)->required();

  struct {
    std::string dataset;
    std::string renders;
    std::string priors;
    std::string out;
  } ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Write metrics.json for rendered test views and priors");
  eval_cmd->add_option("--dataset", ev.dataset)->required();
  eval_cmd->add_option("--renders", ev.renders, "Directory with rgb/ and depth/ renders")->required();
  eval_cmd->add_option("--priors", ev.priors, "Prior directory to score against ground-truth visibility");
  eval_cmd->add_option("--out", ev.out)->required();

  struct {
    std::string dataset;
    std::string priors;
    std::string config;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    int samples = 0;
    std::string out;
  } ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train the full, no_sparse_depth and no_dense_visibility arms");
  ablate_cmd->add_option("--dataset", ab.dataset)->required();
  ablate_cmd->add_option("--priors", ab.priors)->required();
  ablate_cmd->add_option("--config", ab.config, "JSON train config for the full arm");
  ablate_cmd->add_option("--seeds", ab.seeds, "Seeds per arm")->capture_default_str();
  ablate_cmd->add_option("--samples", ab.samples, "Render samples per ray (default: training value)");
  ablate_cmd->add_option("--out", ab.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) {
      const ScenePreset preset = make_preset(gen.preset, gen.views, gen.test_views, gen.resolution);
      if (gen.sparse_points < 0) throw UsageError("--sparse-points must be non-negative");
      const SceneDataset ds = export_dataset(preset, gen.sparse_points, gen.seed, gen.out);
      std::cout << "wrote " << ds.views.size() << " views (" << ds.train_ids.size() << " train) to " << gen.out
                << "\n";
    } else if (*prior_cmd) {
      if (prior.planes < 2) throw UsageError("--planes must be at least 2");
      if (!(prior.gamma > 0.0)) throw UsageError("--gamma must be positive");
      const SceneDataset ds = load_dataset(prior.dataset);
      const PriorSet priors = compute_priors(ds, prior.planes, prior.gamma);
      write_priors(priors, prior.out);
      std::cout << "wrote " << priors.size() << " priors to " << prior.out << "\n";
    } else if (*train_cmd) {
      TrainConfig config = load_train_config(tr.config);
      if (tr.seed) config.seed = *tr.seed;
      const SceneDataset ds = load_dataset(tr.dataset);
      PriorSet priors;
      if (!tr.priors.empty()) {
        priors = load_priors(tr.priors);
      } else if (config.weights.vip > 0.0) {
        throw UsageError("--priors is required when the vip weight is nonzero");
      }
      ensure_dir(tr.out);
      write_json(fs::path(tr.out) / "config.json", train_config_to_json(config));
      const TrainResult result = train(ds, priors, config, {tr.out, nullptr});
      const LogRow& last = result.log.back();
      std::cout << "trained " << config.total_iterations << " iterations, final total loss " << last.total << "\n";
    } else if (*render_cmd) {
      const SceneDataset ds = load_dataset(rd.dataset);
      const Checkpoint ck = load_checkpoint(rd.checkpoint);
      int samples = rd.samples;
      if (samples <= 0) samples = ck.train_config.value("train", nlohmann::json::object()).value("samples_per_ray", 64);
      const RadianceField field = ck.make_field();
      const RenderedSet set = render_test_views(field, ck.train_config, ds, samples);
      write_rendered_set(set, ds, rd.out);
      std::cout << "rendered " << set.views.size() << " test views and " << set.visibility.size()
                << " visibility maps to " << rd.out << "\n";
    } else if (*eval_cmd) {
      const SceneDataset ds = load_dataset(ev.dataset);
      const RenderedSet rendered = load_rendered_set(ev.renders, ds);
      std::optional<PriorSet> priors;
      if (!ev.priors.empty()) priors = load_priors(ev.priors);
      const MetricsReport report = evaluate(ds, rendered, priors ? &*priors : nullptr);
      ensure_dir(ev.out);
      write_json(fs::path(ev.out) / "metrics.json", report.to_json());
      const PsnrResult p = report.mean_psnr();
      std::cout << "psnr " << (p.infinite ? std::string("inf") : std::to_string(p.db)) << " ssim "
                << report.mean_ssim() << "\n";
    } else if (*ablate_cmd) {
      if (ab.seeds.empty()) throw UsageError("--seeds needs at least one value");
      const TrainConfig base = load_train_config(ab.config);
      const SceneDataset ds = load_dataset(ab.dataset);
      const PriorSet priors = load_priors(ab.priors);
      const int samples = ab.samples > 0 ? ab.samples : base.samples_per_ray;
      const auto rows = run_ablation(ds, priors, ablation_arms(base), ab.seeds, samples);
      ensure_dir(ab.out);
      write_json(fs::path(ab.out) / "ablation.json", ablation_table_json(rows));
      for (const auto& r : rows) std::cout << r.arm << " psnr " << median(r.psnr) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error[" << error_kind_name(e.kind()) << "]: " << one_line(e.what()) << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
