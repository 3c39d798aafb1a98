#pragma once

// Linear image-formation operators for a raw burst and their exact
// transposes:
//
//   frame_i = mosaick(downsample(warp(x, S_i), r))
//
// Every operator uses zero boundary conditions so it stays strictly linear,
// and every adjoint is the literal transpose of the forward sampling matrix
// (scatter-add of the same bilinear weights), not an inverse resampling.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "burstsr/error.hpp"
#include "burstsr/tensor.hpp"
#include "burstsr/warp.hpp"

namespace burstsr {

struct DegradationConfig {
  /// Integer downsampling factor between the HR image and the (pre-Bayer)
  /// LR RGB grid. Packed frames are a further factor 2 smaller.
  int scale = 4;

  void validate() const {
    if (scale < 1) throw ParameterError("scale must be >= 1");
  }
};

namespace detail {

// Visits the in-bounds bilinear taps of a sample at continuous *index*
// coordinates (fx, fy), i.e. pixel centers sit on integers. Zero-weight taps
// are skipped so lattice-aligned samples touch exactly one pixel.
template <typename Visit>
inline void for_each_bilinear_tap(double fx, double fy, Index width,
                                  Index height, Visit&& visit) {
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double ax = fx - x0f;
  const double ay = fy - y0f;
  const Index x0 = static_cast<Index>(x0f);
  const Index y0 = static_cast<Index>(y0f);
  const double wx[2] = {1.0 - ax, ax};
  const double wy[2] = {1.0 - ay, ay};
  for (int j = 0; j < 2; ++j) {
    const Index sy = y0 + j;
    if (wy[j] == 0.0 || sy < 0 || sy >= height) continue;
    for (int i = 0; i < 2; ++i) {
      const Index sx = x0 + i;
      if (wx[i] == 0.0 || sx < 0 || sx >= width) continue;
      visit(sx, sy, wx[i] * wy[j]);
    }
  }
}

// Source index coordinates sampled by output pixel (x, y) under `w`.
inline Eigen::Vector2d warp_source(const AffineWarp& w, Index x, Index y) {
  const auto p = w.apply(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5);
  return {p.x() - 0.5, p.y() - 0.5};
}

inline double downsample_source(Index i, int r) {
  return (static_cast<double>(i) + 0.5) * r - 0.5;
}

inline void require_divisible(const Shape& s, Index by, const char* what) {
  if (s.height % by != 0 || s.width % by != 0) {
    throw DimensionError(std::string(what) + ": " + to_string(s) +
                         " not divisible by " + std::to_string(by));
  }
}

}  // namespace detail

/// Bilinear resampling: out(p) = img(w(center of p)), zero outside.
template <typename Scalar>
Tensor3<Scalar> warp(const Tensor3<Scalar>& img, const AffineWarp& w) {
  Tensor3<Scalar> out(img.shape());
  const Index channels = img.channels();
  for (Index y = 0; y < img.height(); ++y) {
    for (Index x = 0; x < img.width(); ++x) {
      const auto src = detail::warp_source(w, x, y);
      Scalar* o = &out(y, x, 0);
      detail::for_each_bilinear_tap(
          src.x(), src.y(), img.width(), img.height(),
          [&](Index sx, Index sy, double weight) {
            const Scalar* s = &img(sy, sx, 0);
            for (Index c = 0; c < channels; ++c) o[c] += static_cast<Scalar>(weight) * s[c];
          });
    }
  }
  return out;
}

/// Transpose of warp(): scatters each pixel back along its bilinear taps.
template <typename Scalar>
Tensor3<Scalar> warp_adjoint(const Tensor3<Scalar>& img, const AffineWarp& w) {
  Tensor3<Scalar> out(img.shape());
  const Index channels = img.channels();
  for (Index y = 0; y < img.height(); ++y) {
    for (Index x = 0; x < img.width(); ++x) {
      const auto src = detail::warp_source(w, x, y);
      const Scalar* v = &img(y, x, 0);
      detail::for_each_bilinear_tap(
          src.x(), src.y(), img.width(), img.height(),
          [&](Index sx, Index sy, double weight) {
            Scalar* o = &out(sy, sx, 0);
            for (Index c = 0; c < channels; ++c) o[c] += static_cast<Scalar>(weight) * v[c];
          });
    }
  }
  return out;
}

/// Point-sampled bilinear decimation by `r`: output (i, j) reads the input at
/// index coordinates ((j + 0.5) r - 0.5, (i + 0.5) r - 0.5).
template <typename Scalar>
Tensor3<Scalar> downsample(const Tensor3<Scalar>& img, int r) {
  if (r < 1) throw ParameterError("scale must be >= 1");
  detail::require_divisible(img.shape(), r, "downsample");
  Tensor3<Scalar> out(img.height() / r, img.width() / r, img.channels());
  const Index channels = img.channels();
  for (Index i = 0; i < out.height(); ++i) {
    for (Index j = 0; j < out.width(); ++j) {
      Scalar* o = &out(i, j, 0);
      detail::for_each_bilinear_tap(
          detail::downsample_source(j, r), detail::downsample_source(i, r),
          img.width(), img.height(), [&](Index sx, Index sy, double weight) {
            const Scalar* s = &img(sy, sx, 0);
            for (Index c = 0; c < channels; ++c) o[c] += static_cast<Scalar>(weight) * s[c];
          });
    }
  }
  return out;
}

template <typename Scalar>
Tensor3<Scalar> downsample_adjoint(const Tensor3<Scalar>& img, int r) {
  if (r < 1) throw ParameterError("scale must be >= 1");
  Tensor3<Scalar> out(img.height() * r, img.width() * r, img.channels());
  const Index channels = img.channels();
  for (Index i = 0; i < img.height(); ++i) {
    for (Index j = 0; j < img.width(); ++j) {
      const Scalar* v = &img(i, j, 0);
      detail::for_each_bilinear_tap(
          detail::downsample_source(j, r), detail::downsample_source(i, r),
          out.width(), out.height(), [&](Index sx, Index sy, double weight) {
            Scalar* o = &out(sy, sx, 0);
            for (Index c = 0; c < channels; ++c) o[c] += static_cast<Scalar>(weight) * v[c];
          });
    }
  }
  return out;
}

/// RGGB sampling of an H x W x 3 image into an H/2 x W/2 packed frame.
template <typename Scalar>
PackedRaw<Scalar> mosaick(const Tensor3<Scalar>& rgb) {
  if (rgb.channels() != 3) throw DimensionError("mosaick expects 3 channels");
  detail::require_divisible(rgb.shape(), 2, "mosaick");
  PackedRaw<Scalar> out(rgb.height() / 2, rgb.width() / 2);
  auto& p = out.planes();
  for (Index i = 0; i < out.height(); ++i) {
    for (Index j = 0; j < out.width(); ++j) {
      p(i, j, 0) = rgb(2 * i, 2 * j, 0);
      p(i, j, 1) = rgb(2 * i, 2 * j + 1, 1);
      p(i, j, 2) = rgb(2 * i + 1, 2 * j, 1);
      p(i, j, 3) = rgb(2 * i + 1, 2 * j + 1, 2);
    }
  }
  return out;
}

template <typename Scalar>
Tensor3<Scalar> mosaick_adjoint(const PackedRaw<Scalar>& raw) {
  Tensor3<Scalar> rgb(raw.height() * 2, raw.width() * 2, 3);
  const auto& p = raw.planes();
  for (Index i = 0; i < raw.height(); ++i) {
    for (Index j = 0; j < raw.width(); ++j) {
      rgb(2 * i, 2 * j, 0) = p(i, j, 0);
      rgb(2 * i, 2 * j + 1, 1) = p(i, j, 1);
      rgb(2 * i + 1, 2 * j, 1) = p(i, j, 2);
      rgb(2 * i + 1, 2 * j + 1, 2) = p(i, j, 3);
    }
  }
  return rgb;
}

/// The full camera response: one noise-free packed frame per warp.
template <typename Scalar>
BasicBurst<Scalar> apply_forward(const Tensor3<Scalar>& x,
                                 const std::vector<AffineWarp>& warps,
                                 const DegradationConfig& cfg) {
  cfg.validate();
  if (warps.empty()) throw ArgumentError("need at least one warp");
  if (x.channels() != 3) throw DimensionError("HR image must have 3 channels");
  detail::require_divisible(x.shape(), 2 * cfg.scale, "apply_forward");
  std::vector<PackedRaw<Scalar>> frames;
  frames.reserve(warps.size());
  for (const auto& w : warps) {
    frames.push_back(mosaick(downsample(warp(x, w), cfg.scale)));
  }
  return BasicBurst<Scalar>(std::move(frames));
}

/// Unnormalized sum over frames of S_i^T H^T M^T frame_i. Frames are reduced
/// in order so the result is bit-reproducible.
template <typename Scalar>
Tensor3<Scalar> apply_adjoint(const BasicBurst<Scalar>& burst,
                              const std::vector<AffineWarp>& warps,
                              const DegradationConfig& cfg) {
  cfg.validate();
  if (warps.size() != burst.size()) {
    throw ArgumentError("warp count " + std::to_string(warps.size()) +
                        " does not match burst size " +
                        std::to_string(burst.size()));
  }
  const Index r2 = 2 * static_cast<Index>(cfg.scale);
  Tensor3<Scalar> acc(burst.frame_height() * r2, burst.frame_width() * r2, 3);
  for (std::size_t i = 0; i < burst.size(); ++i) {
    acc += warp_adjoint(downsample_adjoint(mosaick_adjoint(burst.frame(i)), cfg.scale),
                        warps[i]);
  }
  return acc;
}

/// Power-iteration estimate of ||A^T A||_2 for the operator defined by
/// `warps` and `cfg` on HR images of size `hr`. Returns the Rayleigh quotient
/// of the last normalized iterate; for a PSD operator this sequence is
/// non-decreasing in `iters`.
template <typename Scalar = double>
double operator_norm_estimate(const std::vector<AffineWarp>& warps,
                              const DegradationConfig& cfg, Index hr_height,
                              Index hr_width, int iters,
                              std::uint64_t seed = 0x5eed) {
  if (iters < 20) throw ArgumentError("operator_norm_estimate needs iters >= 20");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Tensor3<Scalar> v(hr_height, hr_width, 3);
  for (Index i = 0; i < v.size(); ++i) v.array()[i] = static_cast<Scalar>(uni(rng));
  v *= static_cast<Scalar>(1.0 / norm(v));
  double rayleigh = 0.0;
  for (int it = 0; it < iters; ++it) {
    Tensor3<Scalar> u = apply_adjoint(apply_forward(v, warps, cfg), warps, cfg);
    rayleigh = dot(v, u);
    const double n = norm(u);
    if (n == 0.0) return 0.0;
    v = u * static_cast<Scalar>(1.0 / n);
  }
  return rayleigh;
}

}  // namespace burstsr
