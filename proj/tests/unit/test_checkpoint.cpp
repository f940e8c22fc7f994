// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vipnerf/checkpoint.hpp"
#include "vipnerf/error.hpp"
#include "vipnerf/png_io.hpp"
#include "vipnerf/render.hpp"

using namespace vipnerf;
namespace fs = std::filesystem;

namespace {

const FieldConfig kSmall{.width = 8, .depth = 2, .pos_freqs = 2, .dir_freqs = 1};

Camera small_camera() { return Camera::from_pose(10, 10, 4.5, 4.5, Mat3::Identity(), Vec3::Zero(), 2, 8, 10, 10); }

// One Adam step so the moments are non-trivial.
Adam stepped_optimizer(const RadianceField& field) {
  Adam adam(AdamConfig{}, field.parameters());
  ad::Tape tape;
  {
    ad::TapeScope scope(tape);
    const std::vector<Vec3> pts{Vec3(0.1, 0.2, 3.0), Vec3(-0.3, 0.1, 5.0)};
    ad::backward(tape, ad::sum(field.query_density(pts).sigma));
  }
  adam.step();
  return adam;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Checkpoint, SaveLoadRenderIsBitwiseIdentical) {
  const auto dir = vipnerf::testing::scratch_dir("ckpt_roundtrip");
  const RadianceField field(kSmall, 5);
  const Adam adam = stepped_optimizer(field);
  const RenderedView before = render_view(field, small_camera(), 8);
  const nlohmann::json meta = {{"note", "x"}, {"resolution", {10, 10}}};
  save_checkpoint((dir / "c.bin").string(), field, &adam, 42, meta);

  const Checkpoint ck = load_checkpoint((dir / "c.bin").string());
  EXPECT_EQ(ck.iteration, 42);
  EXPECT_EQ(ck.field_config, kSmall);
  EXPECT_EQ(ck.train_config, meta);
  EXPECT_EQ(ck.config_hash, checkpoint_config_hash(kSmall));
  ASSERT_TRUE(ck.has_optimizer);
  EXPECT_EQ(ck.optimizer_step, adam.step_count());
  ASSERT_EQ(ck.parameters.size(), field.parameters().size());
  for (size_t i = 0; i < ck.parameters.size(); ++i) {
    EXPECT_EQ(ck.parameters[i].name, field.parameters()[i].name);
    const auto a = ck.parameters[i].tensor.values();
    const auto b = field.parameters()[i].tensor.values();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    EXPECT_EQ(ck.first_moments[i], adam.first_moments()[i]);
    EXPECT_EQ(ck.second_moments[i], adam.second_moments()[i]);
  }
  const RenderedView after = render_view(ck.make_field(), small_camera(), 8);
  EXPECT_TRUE(before.color == after.color);
  EXPECT_TRUE(before.depth == after.depth);
  EXPECT_TRUE(before.opacity == after.opacity);
}

TEST(Checkpoint, SavingTwiceGivesIdenticalBytes) {
  const auto dir = vipnerf::testing::scratch_dir("ckpt_bytes");
  const RadianceField field(kSmall, 6);
  save_checkpoint((dir / "a.bin").string(), field, nullptr, 1, nlohmann::json::object());
  save_checkpoint((dir / "b.bin").string(), field, nullptr, 1, nlohmann::json::object());
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
  EXPECT_FALSE(load_checkpoint((dir / "a.bin").string()).has_optimizer);
  EXPECT_EQ(slurp(dir / "a.bin").substr(0, 8), "VIPNCKPT");
}

TEST(Checkpoint, HashMismatchReportsBothHashes) {
  const auto dir = vipnerf::testing::scratch_dir("ckpt_hash");
  const RadianceField field(kSmall, 7);
  save_checkpoint((dir / "c.bin").string(), field, nullptr, 3, nlohmann::json::object());
  std::string bytes = slurp(dir / "c.bin");
  const std::string stored = checkpoint_config_hash(kSmall);
  const size_t at = bytes.find(stored);
  ASSERT_NE(at, std::string::npos);
  const std::string forged(stored.size(), 'f');
  bytes.replace(at, stored.size(), forged);
  write_text_file((dir / "c.bin").string(), bytes);
  try {
    load_checkpoint((dir / "c.bin").string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(forged), std::string::npos) << msg;
    EXPECT_NE(msg.find(stored), std::string::npos) << msg;
  }
}

TEST(Checkpoint, TruncationAndTrailingBytesAreRejected) {
  const auto dir = vipnerf::testing::scratch_dir("ckpt_trunc");
  const RadianceField field(kSmall, 8);
  save_checkpoint((dir / "c.bin").string(), field, nullptr, 3, nlohmann::json::object());
  const std::string bytes = slurp(dir / "c.bin");
  write_text_file((dir / "short.bin").string(), bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(load_checkpoint((dir / "short.bin").string()), DataError);
  write_text_file((dir / "long.bin").string(), bytes + "x");
  EXPECT_THROW(load_checkpoint((dir / "long.bin").string()), DataError);
  write_text_file((dir / "magic.bin").string(), "NOTACKPT" + bytes.substr(8));
  EXPECT_THROW(load_checkpoint((dir / "magic.bin").string()), DataError);
  EXPECT_THROW(load_checkpoint((dir / "missing.bin").string()), DataError);
}

TEST(Checkpoint, ConfigHashTracksArchitecture) {
  FieldConfig other = kSmall;
  other.width = 16;
  EXPECT_NE(checkpoint_config_hash(kSmall), checkpoint_config_hash(other));
  EXPECT_EQ(checkpoint_config_hash(kSmall), checkpoint_config_hash(kSmall));
  EXPECT_EQ(checkpoint_config_hash(kSmall).size(), 16u);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(field_config_from_json(field_config_to_json(other)), other);
}
