#pragma once

#include "burstsr/tensor.hpp"

namespace burstsr {

struct MetricReport {
  double psnr = 0.0;  // dB, +inf for identical images
  double ssim = 0.0;
};

/// 10 log10(peak^2 / MSE) over all pixels and channels; +inf when equal.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM index with Gaussian-weighted local statistics, averaged over
/// every full window position and every channel.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

/// Both metrics on copies clamped to [0,1] with peak 1.
MetricReport evaluate_linear(const Image& estimate, const Image& reference);

}  // namespace burstsr
