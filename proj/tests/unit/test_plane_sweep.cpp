// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vipnerf/error.hpp"
#include "vipnerf/metrics.hpp"
#include "vipnerf/plane_sweep.hpp"
#include "vipnerf/scene.hpp"

using namespace vipnerf;

namespace {

struct ToyPair {
  ScenePreset preset;
  GroundTruth a;
  GroundTruth b;
  const Camera& cam_a() const { return preset.cameras[preset.train_ids[0]]; }
  const Camera& cam_b() const { return preset.cameras[preset.train_ids[1]]; }
};

ToyPair toy_pair() {
  ToyPair t{make_preset("sphere-box", 2, 0, 64), {}, {}};
  t.a = raycast_ground_truth(t.preset.scene, t.cam_a());
  t.b = raycast_ground_truth(t.preset.scene, t.cam_b());
  t.a.image = quantize_8bit(t.a.image);
  t.b.image = quantize_8bit(t.b.image);
  return t;
}

PlaneSweepVolume psv_with_min_error(std::vector<double> errors) {
  PlaneSweepVolume psv;
  psv.planes = sample_plane_depths(2, 8, 2);
  psv.min_error = make_scalar_map(static_cast<int>(errors.size()), 1);
  psv.argmin_plane = Raster<int>(static_cast<int>(errors.size()), 1, 1, 0);
  for (size_t i = 0; i < errors.size(); ++i) {
    psv.min_error(static_cast<int>(i), 0) = errors[i];
    if (std::isinf(errors[i])) psv.argmin_plane(static_cast<int>(i), 0) = -1;
  }
  return psv;
}

}  // namespace

TEST(PlaneDepths, InverseDepthSpacing) {
  const PlaneDepths p = sample_plane_depths(2.0, 10.0, 3);
  ASSERT_EQ(p.count(), 3u);
  EXPECT_EQ(p.depths[0], 2.0);
  EXPECT_NEAR(p.depths[1], 10.0 / 3.0, 1e-12);
  EXPECT_EQ(p.depths[2], 10.0);
}

TEST(PlaneDepths, TwoPlanesAreTheBounds) {
  const PlaneDepths p = sample_plane_depths(2.0, 8.0, 2);
  EXPECT_EQ(p.depths, (std::vector<double>{2.0, 8.0}));
}

TEST(PlaneDepths, DisparitiesEquallySpaced) {
  const PlaneDepths p = sample_plane_depths(2.0, 8.0, 64);
  const double step = 1.0 / p.depths[1] - 1.0 / p.depths[0];
  for (size_t k = 1; k < p.count(); ++k) {
    EXPECT_NEAR(1.0 / p.depths[k] - 1.0 / p.depths[k - 1], step, 1e-12);
    EXPECT_LT(p.depths[k - 1], p.depths[k]);
  }
}

TEST(PlaneDepths, InvalidArguments) {
  EXPECT_THROW(sample_plane_depths(2.0, 8.0, 1), UsageError);
  EXPECT_THROW(sample_plane_depths(0.0, 8.0, 4), UsageError);
  EXPECT_THROW(sample_plane_depths(8.0, 2.0, 4), UsageError);
}

TEST(Psv, IdenticalViewsHaveZeroErrorEverywhere) {
  const ToyPair t = toy_pair();
  const PlaneSweepVolume psv =
      build_psv(t.a.image, t.cam_a(), t.a.image, t.cam_a(), sample_plane_depths(2, 8, 16));
  for (const auto& e : psv.error_maps) {
    for (double v : e.data()) ASSERT_LT(v, 1e-9);
  }
  for (int v : psv.argmin_plane.data()) EXPECT_EQ(v, 0);
}

TEST(Psv, MinErrorBoundsEveryPlane) {
  const ToyPair t = toy_pair();
  const PlaneSweepVolume psv = build_psv(t.a.image, t.cam_a(), t.b.image, t.cam_b(), sample_plane_depths(2, 8, 64));
  for (int y = 0; y < psv.height(); ++y) {
    for (int x = 0; x < psv.width(); ++x) {
      for (const auto& e : psv.error_maps) ASSERT_LE(psv.min_error(x, y), e(x, y));
      if (psv.matched(x, y)) {
        EXPECT_EQ(psv.min_error(x, y), psv.error_maps[psv.argmin_plane(x, y)](x, y));
      }
    }
  }
}

TEST(Psv, ParallelMatchesSerialReference) {
  const ToyPair t = toy_pair();
  const PlaneDepths planes = sample_plane_depths(2, 8, 32);
  const PlaneSweepVolume p = build_psv(t.a.image, t.cam_a(), t.b.image, t.cam_b(), planes);
  const PlaneSweepVolume s = build_psv_reference(t.a.image, t.cam_a(), t.b.image, t.cam_b(), planes);
  EXPECT_TRUE(p.min_error == s.min_error);
  EXPECT_TRUE(p.argmin_plane == s.argmin_plane);
  for (size_t k = 0; k < planes.count(); ++k) EXPECT_TRUE(p.error_maps[k] == s.error_maps[k]);
}

TEST(Psv, ObjectsMatchBestNearTheirOwnDepth) {
  const ToyPair t = toy_pair();
  const PlaneDepths planes = sample_plane_depths(2, 8, 64);
  const PlaneSweepVolume psv = build_psv(t.a.image, t.cam_a(), t.b.image, t.cam_b(), planes);
  const Mask vis = ground_truth_visibility(t.preset.scene, t.cam_a(), t.cam_b());
  const Mask band = oracle::boundary_band(vis, t.a.depth, planes);
  int box = 0, box_ok = 0, sphere = 0, sphere_ok = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (band(x, y) || !vis(x, y)) continue;
      const auto hit = intersect(t.preset.scene, t.cam_a().center(),
                                 ray_through_pixel(t.cam_a(), Vec2(x, y)).direction);
      const int truth = oracle::nearest_plane(planes, t.a.depth(x, y));
      const bool ok = std::abs(psv.argmin_plane(x, y) - truth) <= 1 && psv.min_error(x, y) < 10.0 * std::log(2.0);
      if (hit->kind == SurfaceKind::Box) {
        ++box;
        box_ok += ok;
      } else if (hit->kind == SurfaceKind::Sphere) {
        ++sphere;
        sphere_ok += ok;
      }
    }
  }
  ASSERT_GT(box, 50);
  ASSERT_GT(sphere, 40);
  EXPECT_GE(box_ok, 0.9 * box);
  EXPECT_GE(sphere_ok, 0.9 * sphere);
}

TEST(Psv, OccludedPixelsMostlyExceedThresholdAtEveryPlane) {
  const ToyPair t = toy_pair();
  const PlaneDepths planes = sample_plane_depths(2, 8, 64);
  for (int pass = 0; pass < 2; ++pass) {
    const GroundTruth& gp = pass == 0 ? t.a : t.b;
    const GroundTruth& gs = pass == 0 ? t.b : t.a;
    const Camera& cp = pass == 0 ? t.cam_a() : t.cam_b();
    const Camera& cs = pass == 0 ? t.cam_b() : t.cam_a();
    const PlaneSweepVolume psv = build_psv(gp.image, cp, gs.image, cs, planes);
    const Mask vis = ground_truth_visibility(t.preset.scene, cp, cs);
    const Mask band = oracle::boundary_band(vis, gp.depth, planes);
    int checked = 0;
    int rejected = 0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (band(x, y) || vis(x, y)) continue;
        ++checked;
        rejected += psv.min_error(x, y) > 10.0 * std::log(2.0);
      }
    }
    EXPECT_GT(checked, 150);
    EXPECT_GE(rejected, 0.95 * checked) << "pass " << pass;
  }
}

TEST(VisibilityPrior, ThresholdExamples) {
  const PlaneSweepVolume psv =
      psv_with_min_error({0.0, 10.0 * std::log(2.0), 3.0, std::numeric_limits<double>::infinity()});
  const VisibilityPriorMap prior = visibility_prior(psv, 10.0);
  EXPECT_EQ(prior.tau(0, 0), 1);
  EXPECT_EQ(prior.tau(1, 0), 0);
  EXPECT_EQ(prior.tau(2, 0), 1);
  EXPECT_EQ(prior.tau(3, 0), 0);
  EXPECT_NEAR(std::exp(-0.3), 0.741, 1e-3);
}

TEST(VisibilityPrior, RejectsNonPositiveGamma) {
  const PlaneSweepVolume psv = psv_with_min_error({0.0});
  EXPECT_THROW(visibility_prior(psv, 0.0), UsageError);
  EXPECT_THROW(visibility_prior(psv, -1.0), UsageError);
}

TEST(VisibilityPrior, MonotoneInGamma) {
  const ToyPair t = toy_pair();
  const PlaneSweepVolume psv = build_psv(t.a.image, t.cam_a(), t.b.image, t.cam_b(), sample_plane_depths(2, 8, 64));
  Mask previous = visibility_prior(psv, 0.5).tau;
  for (double gamma : {1.0, 5.0, 10.0, 20.0, 100.0}) {
    const Mask tau = visibility_prior(psv, gamma).tau;
    for (size_t i = 0; i < tau.data().size(); ++i) ASSERT_GE(tau.data()[i], previous.data()[i]);
    previous = tau;
  }
}

TEST(VisibilityPrior, InvariantToCommonIntensityOffset) {
  const ToyPair t = toy_pair();
  const PlaneDepths planes = sample_plane_depths(2, 8, 64);
  ImageRGB a = t.a.image;
  ImageRGB b = t.b.image;
  for (double& v : a.data()) v += 0.125;
  for (double& v : b.data()) v += 0.125;
  const Mask base = visibility_prior(build_psv(t.a.image, t.cam_a(), t.b.image, t.cam_b(), planes), 10).tau;
  const Mask shifted = visibility_prior(build_psv(a, t.cam_a(), b, t.cam_b(), planes), 10).tau;
  EXPECT_TRUE(base == shifted);
}

TEST(DenseDepth, FrontoParallelPlaneAtSampledDepth) {
  // plane at z = 8 seen with a 0.5 baseline and f = 64 shifts by exactly 4 px
  const Camera a = Camera::from_pose(64, 64, 31.5, 31.5, Mat3::Identity(), Vec3::Zero(), 2, 8, 64, 64);
  const Camera b = Camera::from_pose(64, 64, 31.5, 31.5, Mat3::Identity(), Vec3(0.5, 0, 0), 2, 8, 64, 64);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageRGB ia = make_rgb(64, 64);
  for (double& v : ia.data()) v = u(rng);
  ImageRGB ib = make_rgb(64, 64);
  for (double& v : ib.data()) v = u(rng);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x + 4 < 64; ++x) {
      for (int c = 0; c < 3; ++c) ib(x, y, c) = ia(x + 4, y, c);
    }
  }
  const PlaneDepths planes = sample_plane_depths(2, 8, 64);
  const DenseDepth d = psv_dense_depth(build_psv(ia, a, ib, b, planes));
  for (int y = 0; y < 64; ++y) {
    for (int x = 4; x < 64; ++x) {
      ASSERT_TRUE(d.valid(x, y));
      EXPECT_EQ(d.depth(x, y), 8.0) << "pixel " << x << "," << y;
    }
  }
}

TEST(DenseDepth, TexturelessRegionTakesNearestPlane) {
  const Camera a = Camera::from_pose(32, 32, 15.5, 15.5, Mat3::Identity(), Vec3::Zero(), 2, 8, 32, 32);
  const Camera b = Camera::from_pose(32, 32, 15.5, 15.5, Mat3::Identity(), Vec3(0.3, 0, 0), 2, 8, 32, 32);
  const ImageRGB flat = make_rgb(32, 32, 0.4);
  const DenseDepth d = psv_dense_depth(build_psv(flat, a, flat, b, sample_plane_depths(2, 8, 64)));
  EXPECT_TRUE(d.valid(16, 16));
  EXPECT_EQ(d.depth(16, 16), 2.0);
}

TEST(DenseDepth, ToySceneRankCorrelationIsPositive) {
  const ToyPair t = toy_pair();
  const PlaneSweepVolume psv = build_psv(t.a.image, t.cam_a(), t.b.image, t.cam_b(), sample_plane_depths(2, 8, 64));
  const DenseDepth d = psv_dense_depth(psv);
  const DepthScores s = depth_rmse_srocc(d.depth, t.a.depth, &d.valid);
  EXPECT_GT(s.srocc, 0.0);
}

TEST(AllPairs, CountsOrderedPairs) {
  for (int views : {2, 3, 4}) {
    const ScenePreset p = make_preset("sphere-box", views, 0, 32);
    std::vector<ImageRGB> images;
    for (const Camera& c : p.cameras) images.push_back(raycast_ground_truth(p.scene, c).image);
    const auto priors = prior_for_all_pairs(images, p.cameras, 8, 10.0);
    EXPECT_EQ(priors.size(), static_cast<size_t>(views * (views - 1)));
    for (const auto& prior : priors) EXPECT_NE(prior.primary_view, prior.secondary_view);
  }
}

TEST(AllPairs, FewerThanTwoViewsIsDataError) {
  const Camera c = Camera::from_pose(32, 32, 15.5, 15.5, Mat3::Identity(), Vec3::Zero(), 2, 8, 32, 32);
  EXPECT_THROW(prior_for_all_pairs({make_rgb(32, 32)}, {c}, 8, 10.0), DataError);
}

TEST(PriorFiles, RoundTripWithSidecar) {
  const auto dir = vipnerf::testing::scratch_dir("prior_io");
  VisibilityPriorMap prior;
  prior.tau = make_mask(9, 7);
  prior.tau(3, 2) = 1;
  prior.tau(8, 6) = 1;
  prior.gamma = 10.0;
  prior.primary_view = 4;
  prior.secondary_view = 11;
  prior.plane_count = 64;
  write_prior(prior, dir.string());
  const VisibilityPriorMap back = read_prior((dir / (prior_stem(4, 11) + ".png")).string());
  EXPECT_TRUE(back.tau == prior.tau);
  EXPECT_EQ(back.gamma, 10.0);
  EXPECT_EQ(back.primary_view, 4);
  EXPECT_EQ(back.secondary_view, 11);
  EXPECT_EQ(back.plane_count, 64);
  EXPECT_THROW(read_prior((dir / "missing.png").string()), DataError);
}
