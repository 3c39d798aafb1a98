#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "burstsr/forward_model.hpp"
#include "burstsr/tensor.hpp"
#include "burstsr/warp.hpp"

namespace burstsr {

/// Camera colour parameters of the unprocessing pipeline. `ccm` maps
/// white-balanced linear raw to linear sRGB.
struct CameraParams {
  Eigen::Vector3d rgb_gains = Eigen::Vector3d::Ones();
  Eigen::Matrix3d ccm = Eigen::Matrix3d::Identity();

  void validate() const;
};

/// Heteroskedastic Gaussian noise: variance = read + shot * signal.
struct NoiseParams {
  double shot = 0.0;
  double read = 0.0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SynthConfig {
  int burst_size = 14;
  int scale = 4;
  double max_translation = 4.0;  // HR pixels
  double max_rotation = 1.0;     // degrees
  Range shot_range{1e-4, 1e-2};
  Range read_range{1e-6, 1e-4};
  std::uint64_t seed = 0;
  bool randomize_gains = false;

  void validate() const;
};

struct SynthesizedScene {
  Burst burst;
  Image gt;
  std::vector<AffineWarp> warps;
  NoiseParams noise;
  CameraParams camera;
};

/// Inverse of the smoothstep tone curve 3x^2 - 2x^3.
double inverse_smoothstep(double x);
double smoothstep(double x);

/// sRGB image -> linear raw: inverse tone curve, sRGB decode, inverse CCM,
/// inverse white balance, clamp at zero.
Image srgb_to_linear_raw(const Image& srgb, const CameraParams& cam);

/// Forward camera pipeline for previews: white balance, CCM, sRGB encode,
/// tone curve. Output is display-encoded and clamped to [0,1].
Image linear_raw_to_srgb(const Image& raw, const CameraParams& cam);

/// Independent generator for one named stream of a seeded experiment, so
/// per-frame draws do not depend on scheduling or burst length.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream, std::uint32_t index = 0);

CameraParams sample_camera_params(const SynthConfig& cfg, std::mt19937_64& rng);

/// Frame 0 gets the identity; frame i > 0 a rotation about the image center
/// uniform in +-max_rotation composed with a uniform translation. Frame i
/// draws from its own (seed, i) stream.
std::vector<AffineWarp> sample_warps(const SynthConfig& cfg, Index hr_height, Index hr_width);

AffineWarp sample_warp(const SynthConfig& cfg, Index hr_height, Index hr_width,
                       std::mt19937_64& rng);

/// Log-uniform draws of shot and read variances from the configured ranges.
NoiseParams sample_noise_params(const SynthConfig& cfg, std::mt19937_64& rng);

/// frame + N(0, read + shot * frame), clamped to [0,1].
RawFrame add_noise(const RawFrame& frame, const NoiseParams& np, std::mt19937_64& rng);

SynthesizedScene synthesize(const Image& hr_srgb, const SynthConfig& cfg,
                            const CameraParams& cam);

/// As above, drawing camera parameters from the config (unit gains unless
/// `randomize_gains`).
SynthesizedScene synthesize(const Image& hr_srgb, const SynthConfig& cfg);

}  // namespace burstsr

namespace burstsr {

/// Deterministic band-limited test scene in sRGB [0,1]: a few random
/// sinusoids plus soft-edged discs. `min_wavelength` (HR px) bounds the
/// finest detail.
Image procedural_srgb_scene(Index height, Index width, std::uint64_t seed,
                            double min_wavelength = 16.0);

/// Dead-leaves scene in sRGB [0,1]: occluding flat-coloured discs with
/// radii drawn from a 1/r^3 law between `min_radius` and a fifth of the
/// image, edges softened over `edge_width` HR px. Matches the scale
/// invariance and edge statistics of natural images.
Image dead_leaves_srgb_scene(Index height, Index width, std::uint64_t seed,
                             double min_radius = 4.0, double edge_width = 1.5);

}  // namespace burstsr
