#pragma once

#include <vector>

#include "burstsr/tensor.hpp"
#include "burstsr/warp.hpp"

namespace burstsr {

enum class MotionModel { translation, euclidean };

MotionModel parse_motion_model(const std::string& name);
std::string to_string(MotionModel model);

struct EccResult {
  /// Maps reference coordinates to target coordinates: warp(target, warp)
  /// lines the target up with the reference.
  AffineWarp warp;
  double rho = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct AlignmentConfig {
  MotionModel model = MotionModel::euclidean;
  int max_iters = 50;
  double eps = 1e-4;
  int pyramid_levels = 2;
  /// Gaussian blur applied to both lumas before matching; 0 disables it.
  double prefilter_sigma = 0.8;
  /// Frames whose final correlation stays below this are treated as failed.
  double min_rho = 0.75;
};

struct AlignmentResult {
  /// HR-coordinate warps, ready for the solver. warps[i] maps reference HR
  /// coordinates to frame i ("pull" convention, same as synthesis).
  std::vector<AffineWarp> warps;
  std::vector<bool> converged;
  std::vector<double> final_rho;
};

/// Mean of the four packed channels.
Image raw_to_luma(const RawFrame& frame);

/// Enhanced-correlation-coefficient registration of `target` onto `reference`
/// (single-channel images of equal size). Gauss-Newton steps on the
/// correlation are accepted only if they do not lower it; iteration stops
/// when the parameter increment drops below `eps` or after `max_iters`.
/// Throws AlignmentError for a constant reference.
EccResult ecc_align(const Image& reference, const Image& target, MotionModel model,
                    int max_iters = 50, double eps = 1e-4);

/// Registers every frame against the reference frame coarse-to-fine. Frames
/// that fail keep the identity warp and are flagged not converged.
AlignmentResult align_burst(const Burst& burst, int scale, const AlignmentConfig& cfg = {});

}  // namespace burstsr
