// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunResult run(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd =
      std::string(VIPNERF_CLI_PATH) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void expect_error_line(const RunResult& r, int code, const std::string& kind) {
  EXPECT_EQ(r.code, code) << r.err;
  const std::string prefix = "error[" + kind + "]: ";
  EXPECT_EQ(r.err.rfind(prefix, 0), 0u) << r.err;
  ASSERT_FALSE(r.err.empty());
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << r.err;
}

const char* kTinyConfig =
    R"({"total_iterations": 10, "rays_per_batch": 16, "samples_per_ray": 8, "sparse_rays_per_batch": 4,
        "checkpoint_interval": 0, "optimizer": {"decay_steps": 10},
        "field": {"width": 8, "depth": 2, "pos_freqs": 2, "dir_freqs": 1}})";

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = vipnerf::testing::scratch_dir("cli_usage");
  expect_error_line(run("", dir), 2, "usage");
  expect_error_line(run("frobnicate", dir), 2, "usage");
  expect_error_line(run("generate-scene", dir), 2, "usage");
  expect_error_line(run("generate-scene --preset teapot --out " + q(dir / "d"), dir), 2, "usage");
  expect_error_line(run("compute-prior --dataset x --out y --planes 1", dir), 2, "usage");
  const RunResult help = run("--help", dir);
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("compute-prior"), std::string::npos);
}

TEST(Cli, DataErrorsExitThreeWithPath) {
  const auto dir = vipnerf::testing::scratch_dir("cli_data");
  const RunResult missing = run("compute-prior --dataset " + q(dir / "nope") + " --out " + q(dir / "p"), dir);
  expect_error_line(missing, 3, "data");
  EXPECT_NE(missing.err.find((dir / "nope").string()), std::string::npos) << missing.err;

  ASSERT_EQ(run("generate-scene --views 2 --test-views 1 --resolution 16 --out " + q(dir / "one"), dir).code, 0);
  const auto split = nlohmann::json::parse(slurp(dir / "one" / "split.json"));
  nlohmann::json single = split;
  single["train"] = {split.at("train")[0]};
  std::ofstream(dir / "one" / "split.json") << single.dump();
  expect_error_line(run("compute-prior --dataset " + q(dir / "one") + " --out " + q(dir / "p"), dir), 3, "data");
  expect_error_line(
      run("render --dataset " + q(dir / "one") + " --checkpoint " + q(dir / "none.bin") + " --out " + q(dir / "r"),
          dir),
      3, "data");
}

TEST(Cli, DivergentTrainingExitsFour) {
  const auto dir = vipnerf::testing::scratch_dir("cli_numeric");
  ASSERT_EQ(run("generate-scene --views 2 --test-views 1 --resolution 16 --out " + q(dir / "d"), dir).code, 0);
  const fs::path cfg = dir / "diverge.json";
  std::ofstream(cfg) << R"({"total_iterations": 20, "rays_per_batch": 8, "samples_per_ray": 4,
      "weights": {"vip": 0.0}, "optimizer": {"lr_init": 1e300, "lr_final": 1e300},
      "field": {"width": 8, "depth": 2, "pos_freqs": 2, "dir_freqs": 1}})";
  expect_error_line(
      run("train --dataset " + q(dir / "d") + " --config " + q(cfg) + " --out " + q(dir / "run"), dir), 4,
      "numeric");
}

TEST(Cli, ComputePriorWritesOneFilePerPairAndIsIdempotent) {
  const auto dir = vipnerf::testing::scratch_dir("cli_prior");
  ASSERT_EQ(run("generate-scene --views 2 --test-views 1 --resolution 24 --out " + q(dir / "d"), dir).code, 0);
  ASSERT_EQ(run("compute-prior --dataset " + q(dir / "d") + " --out " + q(dir / "a"), dir).code, 0);
  ASSERT_EQ(run("compute-prior --dataset " + q(dir / "d") + " --out " + q(dir / "b"), dir).code, 0);
  std::vector<std::string> pngs;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().extension() == ".png") pngs.push_back(e.path().filename().string());
  }
  EXPECT_EQ(pngs.size(), 2u);
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path();
  }
  const RunResult help = run("compute-prior --help", dir);
  EXPECT_NE(help.out.find("64"), std::string::npos);
  EXPECT_NE(help.out.find("10"), std::string::npos);
}

TEST(Cli, FullPipelineEmitsAllArtifacts) {
  const auto dir = vipnerf::testing::scratch_dir("cli_pipeline");
  const fs::path data = dir / "data";
  const fs::path priors = dir / "priors";
  const fs::path cfg = dir / "tiny.json";
  std::ofstream(cfg) << kTinyConfig;
  ASSERT_EQ(run("generate-scene --preset sphere-box --views 2 --test-views 2 --resolution 16 --out " + q(data), dir)
                .code,
            0);
  ASSERT_EQ(run("compute-prior --dataset " + q(data) + " --out " + q(priors), dir).code, 0);
  const std::string train = "train --dataset " + q(data) + " --priors " + q(priors) + " --config " + q(cfg);
  ASSERT_EQ(run(train + " --seed 3 --out " + q(dir / "run"), dir).code, 0);
  ASSERT_EQ(run(train + " --seed 3 --out " + q(dir / "run2"), dir).code, 0);
  EXPECT_EQ(slurp(dir / "run" / "train_log.csv"), slurp(dir / "run2" / "train_log.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoint.bin"));
  EXPECT_TRUE(fs::exists(dir / "run" / "config.json"));

  ASSERT_EQ(run("render --dataset " + q(data) + " --checkpoint " + q(dir / "run" / "checkpoint.bin") + " --out " +
                    q(dir / "render"),
                dir)
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir / "render" / "rgb"));
  EXPECT_TRUE(fs::exists(dir / "render" / "depth"));
  EXPECT_TRUE(fs::exists(dir / "render" / "visibility"));
  ASSERT_EQ(run("evaluate --dataset " + q(data) + " --renders " + q(dir / "render") + " --priors " + q(priors) +
                    " --out " + q(dir / "run"),
                dir)
                .code,
            0);
  const auto metrics = nlohmann::json::parse(slurp(dir / "run" / "metrics.json"));
  EXPECT_TRUE(metrics.at("psnr").is_number());
  EXPECT_TRUE(metrics.at("prior_precision").is_number());

  const RunResult gt =
      run("evaluate --dataset " + q(data) + " --renders " + q(data) + " --out " + q(dir / "gt"), dir);
  ASSERT_EQ(gt.code, 0) << gt.err;
  const auto gt_metrics = nlohmann::json::parse(slurp(dir / "gt" / "metrics.json"));
  EXPECT_TRUE(gt_metrics.at("psnr_infinite").get<bool>());
  EXPECT_NEAR(gt_metrics.at("ssim").get<double>(), 1.0, 1e-9);

  const RunResult ab = run("ablate --dataset " + q(data) + " --priors " + q(priors) + " --config " + q(cfg) +
                               " --seeds 0 --out " + q(dir / "ablation"),
                           dir);
  ASSERT_EQ(ab.code, 0) << ab.err;
  const auto table = nlohmann::json::parse(slurp(dir / "ablation" / "ablation.json"));
  ASSERT_EQ(table.at("rows").size(), 3u);
  EXPECT_EQ(table.at("rows")[0].at("arm"), "full");
  EXPECT_EQ(table.at("rows")[1].at("arm"), "no_sparse_depth");
  EXPECT_EQ(table.at("rows")[2].at("arm"), "no_dense_visibility");
}
