#include "burstsr/synthesis.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "burstsr/color.hpp"

namespace burstsr {
namespace {

enum Stream : std::uint32_t {
  kCameraStream = 1,
  kWarpStream = 2,
  kNoiseParamStream = 3,
  kNoiseStream = 4,
  kSceneStream = 5,
};

double log_uniform(const Range& r, std::mt19937_64& rng) {
  if (r.lo == r.hi) return r.lo;
  std::uniform_real_distribution<double> u(std::log(r.lo), std::log(r.hi));
  return std::exp(u(rng));
}

void validate_range(const Range& r, const char* name) {
  // [0, 0] switches the term off.
  const bool off = r.lo == 0.0 && r.hi == 0.0;
  if (!off && (!(r.lo > 0.0) || !(r.hi >= r.lo))) {
    throw ParameterError(std::string(name) + " range must satisfy 0 < lo <= hi");
  }
}

}  // namespace

void CameraParams::validate() const {
  if ((rgb_gains.array() <= 0.0).any()) throw ParameterError("white-balance gains must be positive");
  if (((ccm.rowwise().sum().array() - 1.0).abs() > 1e-6).any()) {
    throw ParameterError("CCM rows must sum to 1");
  }
}

void SynthConfig::validate() const {
  if (burst_size < 1) throw ParameterError("burst size must be >= 1");
  if (scale < 1) throw ParameterError("scale must be >= 1");
  if (max_translation < 0.0 || max_rotation < 0.0) {
    throw ParameterError("motion ranges must be non-negative");
  }
  validate_range(shot_range, "shot");
  validate_range(read_range, "read");
}

double smoothstep(double x) { return x * x * (3.0 - 2.0 * x); }

double inverse_smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return 0.5 - std::sin(std::asin(1.0 - 2.0 * x) / 3.0);
}

Image srgb_to_linear_raw(const Image& srgb, const CameraParams& cam) {
  if (srgb.channels() != 3) throw DimensionError("expected an RGB image");
  Eigen::FullPivLU<Eigen::Matrix3d> lu(cam.ccm);
  if (!lu.isInvertible()) throw ParameterError("CCM is singular");
  const Eigen::Matrix3d inv_ccm = lu.inverse();

  Image out(srgb.shape());
  const Index pixels = srgb.height() * srgb.width();
  for (Index p = 0; p < pixels; ++p) {
    Eigen::Vector3d v;
    for (int c = 0; c < 3; ++c) {
      v[c] = srgb_decode(inverse_smoothstep(srgb.array()[3 * p + c]));
    }
    const Eigen::Vector3d raw = (inv_ccm * v).cwiseQuotient(cam.rgb_gains);
    for (int c = 0; c < 3; ++c) out.array()[3 * p + c] = std::max(raw[c], 0.0);
  }
  return out;
}

Image linear_raw_to_srgb(const Image& raw, const CameraParams& cam) {
  if (raw.channels() != 3) throw DimensionError("expected an RGB image");
  Image out(raw.shape());
  const Index pixels = raw.height() * raw.width();
  for (Index p = 0; p < pixels; ++p) {
    Eigen::Vector3d v(raw.array()[3 * p], raw.array()[3 * p + 1], raw.array()[3 * p + 2]);
    const Eigen::Vector3d lin = cam.ccm * v.cwiseProduct(cam.rgb_gains);
    for (int c = 0; c < 3; ++c) {
      out.array()[3 * p + c] = smoothstep(std::clamp(srgb_encode(std::clamp(lin[c], 0.0, 1.0)), 0.0, 1.0));
    }
  }
  return out;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream, index};
  return std::mt19937_64(seq);
}

CameraParams sample_camera_params(const SynthConfig& cfg, std::mt19937_64& rng) {
  CameraParams cam;
  if (cfg.randomize_gains) {
    std::uniform_real_distribution<double> gain(1.6, 2.4);
    cam.rgb_gains[0] = gain(rng);
    cam.rgb_gains[2] = gain(rng);
  }
  return cam;
}

AffineWarp sample_warp(const SynthConfig& cfg, Index hr_height, Index hr_width,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double angle = unit(rng) * cfg.max_rotation * std::numbers::pi / 180.0;
  const double tx = unit(rng) * cfg.max_translation;
  const double ty = unit(rng) * cfg.max_translation;
  return AffineWarp::euclidean(angle, tx, ty, 0.5 * static_cast<double>(hr_width),
                               0.5 * static_cast<double>(hr_height));
}

std::vector<AffineWarp> sample_warps(const SynthConfig& cfg, Index hr_height, Index hr_width) {
  cfg.validate();
  std::vector<AffineWarp> warps;
  warps.reserve(static_cast<std::size_t>(cfg.burst_size));
  warps.push_back(AffineWarp::identity());
  for (int i = 1; i < cfg.burst_size; ++i) {
    auto rng = make_stream(cfg.seed, kWarpStream, static_cast<std::uint32_t>(i));
    warps.push_back(sample_warp(cfg, hr_height, hr_width, rng));
  }
  return warps;
}

NoiseParams sample_noise_params(const SynthConfig& cfg, std::mt19937_64& rng) {
  validate_range(cfg.shot_range, "shot");
  validate_range(cfg.read_range, "read");
  NoiseParams np;
  np.shot = log_uniform(cfg.shot_range, rng);
  np.read = log_uniform(cfg.read_range, rng);
  return np;
}

RawFrame add_noise(const RawFrame& frame, const NoiseParams& np, std::mt19937_64& rng) {
  if (np.shot < 0.0 || np.read < 0.0) throw ParameterError("noise variances must be >= 0");
  RawFrame out = frame;
  if (np.shot == 0.0 && np.read == 0.0) return out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto& a = out.planes().array();
  for (Index i = 0; i < a.size(); ++i) {
    const double variance = np.read + np.shot * std::max(a[i], 0.0);
    a[i] = std::clamp(a[i] + std::sqrt(variance) * gauss(rng), 0.0, 1.0);
  }
  return out;
}

SynthesizedScene synthesize(const Image& hr_srgb, const SynthConfig& cfg, const CameraParams& cam) {
  cfg.validate();
  cam.validate();
  detail::require_divisible(hr_srgb.shape(), 2 * cfg.scale, "synthesize");

  SynthesizedScene scene;
  scene.camera = cam;
  scene.gt = srgb_to_linear_raw(hr_srgb, cam);
  scene.warps = sample_warps(cfg, hr_srgb.height(), hr_srgb.width());
  auto noise_rng = make_stream(cfg.seed, kNoiseParamStream);
  scene.noise = sample_noise_params(cfg, noise_rng);

  // Same code path as the solver's forward operator; noise is added on the
  // packed measurements.
  const Burst clean = apply_forward(scene.gt, scene.warps, DegradationConfig{cfg.scale});
  std::vector<RawFrame> frames;
  frames.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    auto rng = make_stream(cfg.seed, kNoiseStream, static_cast<std::uint32_t>(i));
    frames.push_back(add_noise(clean.frame(i), scene.noise, rng));
  }
  scene.burst = Burst(std::move(frames));
  return scene;
}

SynthesizedScene synthesize(const Image& hr_srgb, const SynthConfig& cfg) {
  auto rng = make_stream(cfg.seed, kCameraStream);
  return synthesize(hr_srgb, cfg, sample_camera_params(cfg, rng));
}

Image procedural_srgb_scene(Index height, Index width, std::uint64_t seed,
                            double min_wavelength) {
  if (!(min_wavelength > 0.0)) throw ParameterError("min_wavelength must be positive");
  auto rng = make_stream(seed, kSceneStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  struct Wave {
    double fx, fy, phase;
    Eigen::Vector3d amp;
  };
  std::vector<Wave> waves(6);
  for (auto& w : waves) {
    const double wavelength = min_wavelength * (1.0 + 3.0 * unit(rng));
    const double dir = kTwoPi * unit(rng);
    w.fx = std::cos(dir) / wavelength;
    w.fy = std::sin(dir) / wavelength;
    w.phase = kTwoPi * unit(rng);
    w.amp = Eigen::Vector3d(unit(rng), unit(rng), unit(rng)) * 0.08;
  }
  struct Disc {
    double cx, cy, radius;
    Eigen::Vector3d colour;
  };
  std::vector<Disc> discs(3);
  const double extent = static_cast<double>(std::min(height, width));
  for (auto& d : discs) {
    d.cx = unit(rng) * static_cast<double>(width);
    d.cy = unit(rng) * static_cast<double>(height);
    d.radius = extent * (0.1 + 0.2 * unit(rng));
    d.colour = Eigen::Vector3d(unit(rng), unit(rng), unit(rng)) * 0.5 - Eigen::Vector3d::Constant(0.25);
  }
  const double softness = 0.25 * min_wavelength;

  Image img(height, width, 3);
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      Eigen::Vector3d v = Eigen::Vector3d::Constant(0.5);
      for (const auto& w : waves) v += w.amp * std::sin(kTwoPi * (w.fx * px + w.fy * py) + w.phase);
      for (const auto& d : discs) {
        const double dist = std::hypot(px - d.cx, py - d.cy) - d.radius;
        v += d.colour / (1.0 + std::exp(dist / softness));
      }
      for (int c = 0; c < 3; ++c) img(y, x, c) = std::clamp(v[c], 0.02, 0.98);
    }
  }
  return img;
}

Image dead_leaves_srgb_scene(Index height, Index width, std::uint64_t seed,
                             double min_radius, double edge_width) {
  if (!(min_radius > 0.0)) throw ParameterError("min_radius must be positive");
  if (!(edge_width > 0.0)) throw ParameterError("edge_width must be positive");
  auto rng = make_stream(seed, kSceneStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max_radius =
      std::max(min_radius, 0.2 * static_cast<double>(std::min(height, width)));

  // Leaves are drawn front to back; a pixel stops accumulating once it is
  // (almost) fully covered.
  Image img(height, width, 3);
  Eigen::ArrayXd cover = Eigen::ArrayXd::Zero(height * width);
  const double inv_lo = 1.0 / (min_radius * min_radius);
  const double inv_hi = 1.0 / (max_radius * max_radius);
  for (int leaf = 0; leaf < 5000 && cover.minCoeff() < 0.999; ++leaf) {
    // Inverse CDF of p(r) ~ r^-3 on [min_radius, max_radius].
    const double radius = 1.0 / std::sqrt(inv_lo - unit(rng) * (inv_lo - inv_hi));
    const double cx = unit(rng) * static_cast<double>(width);
    const double cy = unit(rng) * static_cast<double>(height);
    const Eigen::Vector3d colour(0.05 + 0.9 * unit(rng), 0.05 + 0.9 * unit(rng),
                                 0.05 + 0.9 * unit(rng));
    const double reach = radius + 4.0 * edge_width;
    const auto y0 = static_cast<Index>(std::max(0.0, std::floor(cy - reach)));
    const auto y1 = static_cast<Index>(std::min<double>(height, std::ceil(cy + reach)));
    const auto x0 = static_cast<Index>(std::max(0.0, std::floor(cx - reach)));
    const auto x1 = static_cast<Index>(std::min<double>(width, std::ceil(cx + reach)));
    for (Index y = y0; y < y1; ++y) {
      for (Index x = x0; x < x1; ++x) {
        double& c = cover[y * width + x];
        if (c >= 0.999) continue;
        const double dist = std::hypot(static_cast<double>(x) + 0.5 - cx,
                                       static_cast<double>(y) + 0.5 - cy) - radius;
        const double a = (1.0 - c) / (1.0 + std::exp(dist / (0.5 * edge_width)));
        for (int ch = 0; ch < 3; ++ch) img(y, x, ch) += a * colour[ch];
        c += a;
      }
    }
  }
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const double c = cover[y * width + x];
      for (int ch = 0; ch < 3; ++ch) {
        img(y, x, ch) = std::clamp(img(y, x, ch) + (1.0 - c) * 0.5, 0.0, 1.0);
      }
    }
  }
  return img;
}

}  // namespace burstsr
