// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vipnerf/error.hpp"
#include "vipnerf/field.hpp"

using namespace vipnerf;

namespace {

FieldConfig small_config() { return {.width = 8, .depth = 2, .pos_freqs = 2, .dir_freqs = 1}; }

std::vector<Vec3> random_points(size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), 4.0 + u(rng));
  return pts;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST(PositionalEncoding, DimensionFormula) {
  for (int l : {0, 4, 10}) {
    EXPECT_EQ(PositionalEncoding(l, true).output_dim(), 3 * (1 + 2 * l));
    if (l > 0) EXPECT_EQ(PositionalEncoding(l, false).output_dim(), 3 * 2 * l);
  }
  EXPECT_THROW(PositionalEncoding(0, false), UsageError);
  EXPECT_THROW(PositionalEncoding(-1, true), UsageError);
}

TEST(PositionalEncoding, ValuesAndBatchAgree) {
  const PositionalEncoding enc(2, true);
  const Vec3 v(0.3, -1.2, 2.5);
  std::vector<double> out(enc.output_dim());
  enc.encode(v, out);
  for (double x : out) EXPECT_TRUE(std::isfinite(x));
  for (int c = 0; c < 3; ++c) {
    EXPECT_TRUE(std::find(out.begin(), out.end(), v[c]) != out.end());
    EXPECT_TRUE(std::find(out.begin(), out.end(), std::sin(2.0 * v[c])) != out.end());
    EXPECT_TRUE(std::find(out.begin(), out.end(), std::cos(v[c])) != out.end());
  }
  const std::vector<Vec3> batch{v, Vec3::Zero()};
  const ad::Tensor t = enc.encode_batch(batch);
  ASSERT_EQ(t.rows(), 2u);
  ASSERT_EQ(t.cols(), static_cast<size_t>(enc.output_dim()));
  for (size_t i = 0; i < out.size(); ++i) EXPECT_EQ(t.at(0, i), out[i]);
}

TEST(Field, FreshInitialisationIsFiniteAndNonNegative) {
  ad::NoGradScope no_grad;
  const RadianceField field(FieldConfig{}, 1);
  std::mt19937_64 rng(2);
  const auto pts = random_points(64, rng);
  const DensityOutput d = field.query_density(pts);
  ASSERT_EQ(d.sigma.shape(), (ad::Shape{64, 1}));
  ASSERT_EQ(d.latent.shape(), (ad::Shape{64, 128}));
  for (double s : d.sigma.values()) {
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GE(s, 0.0);
  }
  for (double h : d.latent.values()) EXPECT_TRUE(std::isfinite(h));
}

TEST(Field, IdenticalInputsGiveBitwiseIdenticalOutputs) {
  ad::NoGradScope no_grad;
  const RadianceField a(small_config(), 7);
  const RadianceField b(small_config(), 7);
  const std::vector<Vec3> pts{Vec3(0.1, 0.2, 3.0), Vec3(0.1, 0.2, 3.0)};
  const DensityOutput da = a.query_density(pts);
  const DensityOutput db = b.query_density(pts);
  EXPECT_EQ(da.sigma.at(0, 0), da.sigma.at(1, 0));
  EXPECT_TRUE(std::equal(da.sigma.values().begin(), da.sigma.values().end(), db.sigma.values().begin()));
  EXPECT_TRUE(std::equal(da.latent.values().begin(), da.latent.values().end(), db.latent.values().begin()));
  const std::vector<Vec3> dir{Vec3(0, 0, 1)};
  const RadianceOutput ra = a.query_radiance(da.latent, dir);
  const RadianceOutput rb = b.query_radiance(db.latent, dir);
  EXPECT_TRUE(std::equal(ra.color.values().begin(), ra.color.values().end(), rb.color.values().begin()));
  EXPECT_TRUE(std::equal(ra.visibility.values().begin(), ra.visibility.values().end(), rb.visibility.values().begin()));
}

TEST(Field, DifferentSeedsDiffer) {
  ad::NoGradScope no_grad;
  const RadianceField a(small_config(), 1);
  const RadianceField b(small_config(), 2);
  const std::vector<Vec3> pts{Vec3(0.1, 0.2, 3.0)};
  EXPECT_NE(a.query_density(pts).sigma.item(), b.query_density(pts).sigma.item());
}

TEST(Field, NonFinitePointIsRejected) {
  ad::NoGradScope no_grad;
  const RadianceField field(small_config(), 1);
  const std::vector<Vec3> pts{Vec3(0, std::nan(""), 1)};
  EXPECT_THROW(field.query_density(pts), NumericError);
}

TEST(Field, NonUnitDirectionIsRejected) {
  ad::NoGradScope no_grad;
  const RadianceField field(small_config(), 1);
  const std::vector<Vec3> pts{Vec3(0, 0, 3)};
  const DensityOutput d = field.query_density(pts);
  const std::vector<Vec3> bad{Vec3(0, 0, 1.001)};
  EXPECT_THROW(field.query_radiance(d.latent, bad), GeometryError);
  const std::vector<Vec3> two{Vec3(0, 0, 1), Vec3(1, 0, 0)};
  EXPECT_THROW(field.query_radiance(d.latent, std::span<const Vec3>(two.data(), 2)), ShapeError);
}

TEST(Field, ViewDependenceFromOneLatent) {
  ad::NoGradScope no_grad;
  const RadianceField field(small_config(), 3);
  const std::vector<Vec3> pts{Vec3(0.4, -0.1, 3.5)};
  const DensityOutput d = field.query_density(pts);
  const std::vector<Vec3> v1{Vec3(0, 0, 1)};
  const std::vector<Vec3> v2{Vec3(1, 0, 0)};
  const RadianceOutput r1 = field.query_radiance(d.latent, v1);
  const RadianceOutput r2 = field.query_radiance(d.latent, v2);
  bool differs = r1.visibility.item() != r2.visibility.item();
  for (int c = 0; c < 3; ++c) differs = differs || r1.color.at(0, c) != r2.color.at(0, c);
  EXPECT_TRUE(differs);
}

TEST(Field, OutputsStayInRangeForLargeWeights) {
  ad::NoGradScope no_grad;
  RadianceField field(small_config(), 4);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (const auto& p : field.parameters()) {
    auto v = ad::Tensor(p.tensor).mutable_values();
    for (double& x : v) x = u(rng);
  }
  const auto pts = random_points(32, rng);
  const DensityOutput d = field.query_density(pts);
  std::vector<Vec3> dirs(32);
  for (auto& v : dirs) v = random_unit(rng);
  const RadianceOutput r = field.query_radiance(d.latent, dirs);
  for (double s : d.sigma.values()) {
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GE(s, 0.0);
  }
  for (double c : r.color.values()) {
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
  for (double t : r.visibility.values()) {
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
  }
}

TEST(Field, QueryCounterCountsPoints) {
  ad::NoGradScope no_grad;
  const RadianceField field(small_config(), 1);
  std::mt19937_64 rng(1);
  const auto pts = random_points(10, rng);
  const DensityOutput d = field.query_density(pts);
  const std::vector<Vec3> dir{Vec3(0, 0, 1)};
  field.query_radiance(d.latent, dir);
  field.query_radiance(d.latent, dir);
  EXPECT_EQ(field.counter().f1_points.load(), 10u);
  EXPECT_EQ(field.counter().f2_points.load(), 20u);
  field.counter().reset();
  EXPECT_EQ(field.counter().f1_points.load(), 0u);
}

TEST(Field, CloneIsIndependent) {
  ad::NoGradScope no_grad;
  const RadianceField field(small_config(), 1);
  RadianceField copy = field.clone();
  const std::vector<Vec3> pts{Vec3(0.2, 0.1, 3.0)};
  const double before = field.query_density(pts).sigma.item();
  ad::Tensor(copy.parameters()[0].tensor).mutable_values()[0] += 1.0;
  EXPECT_EQ(field.query_density(pts).sigma.item(), before);
  RadianceField shared = field;
  EXPECT_EQ(shared.parameters()[0].tensor.node(), field.parameters()[0].tensor.node());
}

TEST(Field, DensityGradientMatchesFiniteDifferences) {
  const RadianceField field(small_config(), 11);
  std::mt19937_64 rng(12);
  const auto pts = random_points(5, rng);
  std::vector<ad::Tensor> leaves;
  for (const auto& p : field.parameters()) {
    if (p.name.starts_with("f1.")) leaves.push_back(p.tensor);
  }
  ASSERT_FALSE(leaves.empty());
  vipnerf::testing::expect_gradients_match(
      [&](const std::vector<ad::Tensor>&) { return ad::sum(field.query_density(pts).sigma); }, leaves, 1e-5, 1e-6);
}

TEST(Field, RadianceGradientMatchesFiniteDifferences) {
  const RadianceField field(small_config(), 13);
  std::mt19937_64 rng(14);
  const auto pts = random_points(4, rng);
  std::vector<Vec3> dirs(4);
  for (auto& v : dirs) v = random_unit(rng);
  std::vector<ad::Tensor> leaves;
  for (const auto& p : field.parameters()) leaves.push_back(p.tensor);
  vipnerf::testing::expect_gradients_match(
      [&](const std::vector<ad::Tensor>&) {
        const DensityOutput d = field.query_density(pts);
        const RadianceOutput r = field.query_radiance(d.latent, dirs);
        return ad::sum(r.color) + ad::scale(ad::sum(r.visibility), 0.7) + ad::sum(d.sigma);
      },
      leaves, 1e-5, 1e-6);
}
