#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "burstsr/alignment.hpp"
#include "burstsr/error.hpp"
#include "burstsr/forward_model.hpp"
#include "burstsr/priors.hpp"
#include "burstsr/synthesis.hpp"
#include "test_support.hpp"

namespace burstsr {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Smooth single-channel test image with structure in both directions.
Image smooth_luma(Index size, std::uint64_t seed) {
  const Image rgb = procedural_srgb_scene(size, size, seed, 12.0);
  Image luma(size, size, 1);
  for (Index y = 0; y < size; ++y) {
    for (Index x = 0; x < size; ++x) {
      luma(y, x, 0) = (rgb(y, x, 0) + rgb(y, x, 1) + rgb(y, x, 2)) / 3.0;
    }
  }
  return gaussian_blur(luma, 1.0);
}

// Reference and target cropped from the middle of a larger view, so neither
// carries the dark border a zero-boundary warp leaves at the image edge.
struct Pair {
  Image reference, target;
};
Pair cropped_pair(Index size, std::uint64_t seed, const AffineWarp& motion_about_center) {
  const Index pad = 16, big = size + 2 * pad;
  const Image ref = smooth_luma(big, seed);
  const Image tgt = warp(ref, motion_about_center);
  Pair p{Image(size, size, 1), Image(size, size, 1)};
  for (Index y = 0; y < size; ++y) {
    for (Index x = 0; x < size; ++x) {
      p.reference(y, x, 0) = ref(y + pad, x + pad, 0);
      p.target(y, x, 0) = tgt(y + pad, x + pad, 0);
    }
  }
  return p;
}

// Mean distance between two warps over a regular grid of HR positions.
double endpoint_error(const AffineWarp& a, const AffineWarp& b, Index h, Index w) {
  double sum = 0.0;
  int n = 0;
  for (Index y = 0; y < h; y += 4) {
    for (Index x = 0; x < w; x += 4) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      sum += (a.apply(px, py) - b.apply(px, py)).norm();
      ++n;
    }
  }
  return sum / n;
}

SynthConfig burst_config(int burst, std::uint64_t seed, double shot) {
  SynthConfig cfg;
  cfg.burst_size = burst;
  cfg.scale = 4;
  cfg.seed = seed;
  cfg.max_translation = 2.0;
  cfg.max_rotation = 1.0;
  if (shot > 0.0) {
    cfg.shot_range = {shot, shot};
    cfg.read_range = {1e-6, 1e-6};
  } else {
    cfg.shot_range = {0.0, 0.0};
    cfg.read_range = {0.0, 0.0};
  }
  return cfg;
}

TEST(Luma, MeanOfPackedChannels) {
  Image planes(1, 1, 4);
  planes(0, 0, 0) = 1.0;
  planes(0, 0, 1) = 2.0;
  planes(0, 0, 2) = 2.0;
  planes(0, 0, 3) = 3.0;
  EXPECT_DOUBLE_EQ(raw_to_luma(RawFrame(planes))(0, 0, 0), 2.0);
  EXPECT_TRUE((raw_to_luma(RawFrame(Image::constant(3, 3, 4, 0.4))).array() == 0.4).all());
}

TEST(Ecc, IdenticalImagesGiveIdentity) {
  const Image ref = smooth_luma(64, 1);
  const EccResult r = ecc_align(ref, ref, MotionModel::euclidean);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.rho, 1.0, 1e-6);
  EXPECT_TRUE(r.warp.is_identity(1e-6));
}

TEST(Ecc, RecoversTranslation) {
  // target(p) = ref(shift(p)), so the estimate maps reference pixels back by -shift.
  const Pair p = cropped_pair(64, 2, AffineWarp::translation(1.5, -0.75));
  for (MotionModel model : {MotionModel::translation, MotionModel::euclidean}) {
    const EccResult r = ecc_align(p.reference, p.target, model);
    EXPECT_TRUE(r.converged);
    const auto t = r.warp.inverse().apply(32.0, 32.0);
    EXPECT_NEAR(t.x() - 32.0, 1.5, 0.1);
    EXPECT_NEAR(t.y() - 32.0, -0.75, 0.1);
  }
}

TEST(Ecc, RecoversRotation) {
  const Pair p = cropped_pair(64, 3, AffineWarp::euclidean(0.5 * kDeg, 0.0, 0.0, 48.0, 48.0));
  const EccResult r = ecc_align(p.reference, p.target, MotionModel::euclidean);
  EXPECT_TRUE(r.converged);
  const auto m = r.warp.inverse().matrix();
  EXPECT_NEAR(std::atan2(m(1, 0), m(0, 0)) / kDeg, 0.5, 0.05);
}

TEST(Ecc, ConstantReferenceIsAnError) {
  const Image flat = Image::constant(32, 32, 1, 0.3);
  EXPECT_THROW(ecc_align(flat, smooth_luma(32, 4), MotionModel::euclidean), AlignmentError);
  EXPECT_THROW(ecc_align(Image(8, 8, 3), Image(8, 8, 3), MotionModel::euclidean),
               DimensionError);
}

TEST(Ecc, UnrelatedNoiseDoesNotConverge) {
  const Image ref = smooth_luma(48, 5);
  std::mt19937_64 rng(5);
  const Image noise = testing::random_image(48, 48, 1, rng, 0.0, 1.0);
  EXPECT_FALSE(ecc_align(ref, noise, MotionModel::euclidean).converged);
}

TEST(AlignBurst, IdenticalFramesGiveIdentities) {
  const SynthesizedScene s = synthesize(procedural_srgb_scene(128, 128, 6), burst_config(1, 6, 0));
  const Burst b({s.burst.frame(0), s.burst.frame(0), s.burst.frame(0), s.burst.frame(0)});
  const AlignmentResult r = align_burst(b, 4);
  ASSERT_EQ(r.warps.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_TRUE(r.converged[i]);
    EXPECT_TRUE(r.warps[i].is_identity(1e-6));
  }
}

TEST(AlignBurst, RecoversKnownWarpsWithoutNoise) {
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SynthesizedScene s =
        synthesize(procedural_srgb_scene(384, 384, 100 + seed, 24.0), burst_config(6, seed, 0));
    const AlignmentResult r = align_burst(s.burst, 4);
    EXPECT_TRUE(r.warps[0].is_identity(0.0));
    for (std::size_t i = 1; i < 6; ++i) {
      ASSERT_TRUE(r.converged[i]);
      sum += endpoint_error(r.warps[i], s.warps[i], 384, 384);
      ++n;
    }
  }
  EXPECT_LT(sum / n, 0.1);
}

TEST(AlignBurst, NoiseFrameFallsBackToIdentity) {
  const SynthesizedScene s = synthesize(procedural_srgb_scene(256, 256, 7), burst_config(4, 7, 0));
  std::mt19937_64 rng(7);
  std::vector<RawFrame> frames = s.burst.frames();
  frames[2] = RawFrame(testing::random_image(32, 32, 4, rng, 0.0, 1.0));
  const AlignmentResult clean = align_burst(s.burst, 4);
  const AlignmentResult r = align_burst(Burst(frames), 4);
  EXPECT_FALSE(r.converged[2]);
  EXPECT_TRUE(r.warps[2].is_identity(0.0));
  for (std::size_t i : {0u, 1u, 3u}) {
    EXPECT_TRUE(r.converged[i]);
    EXPECT_EQ(r.warps[i].matrix(), clean.warps[i].matrix());
  }
}

TEST(AlignBurst, IdentityMotionUnderNoise) {
  SynthConfig cfg = burst_config(6, 8, 1e-3);
  cfg.max_translation = 0.0;
  cfg.max_rotation = 0.0;
  const SynthesizedScene s = synthesize(dead_leaves_srgb_scene(384, 384, 8), cfg);
  const AlignmentResult r = align_burst(s.burst, 4);
  double worst = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(r.converged[i]);
    worst = std::max(worst, endpoint_error(r.warps[i], AffineWarp::identity(), 384, 384));
  }
  EXPECT_LT(worst / 8.0, 0.02);  // packed LR pixels
}

TEST(AlignBurst, WarpsAreFiniteAndFailuresAreIdentity) {
  const SynthesizedScene s =
      synthesize(procedural_srgb_scene(128, 128, 9), burst_config(5, 9, 1e-2));
  const AlignmentResult r = align_burst(s.burst, 4);
  for (std::size_t i = 0; i < r.warps.size(); ++i) {
    EXPECT_TRUE(r.warps[i].matrix().allFinite());
    if (!r.converged[i]) {
      EXPECT_TRUE(r.warps[i].is_identity(0.0));
    }
    EXPECT_GE(r.final_rho[i], -1.0);
    EXPECT_LE(r.final_rho[i], 1.0);
  }
}

TEST(AlignBurst, RhoDoesNotDecreaseWithMoreIterations) {
  const Pair p = cropped_pair(64, 10, AffineWarp::euclidean(0.8 * kDeg, 1.2, 0.6, 48.0, 48.0));
  double prev = -1.0;
  for (int iters = 1; iters <= 8; ++iters) {
    const double rho = ecc_align(p.reference, p.target, MotionModel::euclidean, iters, 0.0).rho;
    EXPECT_GE(rho, prev - 1e-15);
    prev = rho;
  }
}

TEST(AlignBurst, ConfigValidation) {
  const SynthesizedScene s = synthesize(procedural_srgb_scene(64, 64, 1), burst_config(2, 1, 0));
  AlignmentConfig cfg;
  cfg.pyramid_levels = 0;
  EXPECT_THROW(align_burst(s.burst, 4, cfg), ParameterError);
  EXPECT_THROW(align_burst(s.burst, 0), ParameterError);
  cfg = AlignmentConfig{};
  cfg.min_rho = 1.5;
  EXPECT_THROW(align_burst(s.burst, 4, cfg), ParameterError);
  EXPECT_EQ(parse_motion_model("translation"), MotionModel::translation);
  EXPECT_THROW(parse_motion_model("homography"), ArgumentError);
}

}  // namespace
}  // namespace burstsr
