#include "burstsr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace burstsr {
namespace {

void require_same(const Image& a, const Image& b) {
  if (!(a.shape() == b.shape())) {
    throw ArgumentError("metric inputs differ in shape: " + to_string(a.shape()) + " vs " +
                        to_string(b.shape()));
  }
}

// Valid-mode separable filtering of one channel stored as a dense h x w
// plane.
std::vector<double> filter_valid(const std::vector<double>& plane, Index h, Index w,
                                 const std::vector<double>& k) {
  const auto n = static_cast<Index>(k.size());
  const Index ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * plane[static_cast<std::size_t>(y * w + x + i)];
      tmp[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (Index y = 0; y < oh; ++y) {
    for (Index x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>((y + i) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  require_same(a, b);
  if (a.size() == 0) throw ArgumentError("PSNR of empty images");
  const double mse = (a.array() - b.array()).square().sum() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts) {
  require_same(a, b);
  if (opts.window < 1 || a.height() < opts.window || a.width() < opts.window) {
    throw ArgumentError("image smaller than the SSIM window");
  }
  const int half = opts.window / 2;
  std::vector<double> k(static_cast<std::size_t>(opts.window));
  double ksum = 0.0;
  for (int i = 0; i < opts.window; ++i) {
    const double d = i - half + (opts.window % 2 == 0 ? 0.5 : 0.0);
    k[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (opts.sigma * opts.sigma));
    ksum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= ksum;

  const double c1 = (opts.k1 * opts.peak) * (opts.k1 * opts.peak);
  const double c2 = (opts.k2 * opts.peak) * (opts.k2 * opts.peak);
  const Index h = a.height(), w = a.width(), pixels = h * w;

  double total = 0.0;
  std::size_t count = 0;
  for (Index c = 0; c < a.channels(); ++c) {
    std::vector<double> pa(static_cast<std::size_t>(pixels)), pb(pa.size()), paa(pa.size()),
        pbb(pa.size()), pab(pa.size());
    for (Index p = 0; p < pixels; ++p) {
      const double va = a.array()[p * a.channels() + c];
      const double vb = b.array()[p * b.channels() + c];
      const auto s = static_cast<std::size_t>(p);
      pa[s] = va;
      pb[s] = vb;
      paa[s] = va * va;
      pbb[s] = vb * vb;
      pab[s] = va * vb;
    }
    const auto mu_a = filter_valid(pa, h, w, k);
    const auto mu_b = filter_valid(pb, h, w, k);
    const auto e_aa = filter_valid(paa, h, w, k);
    const auto e_bb = filter_valid(pbb, h, w, k);
    const auto e_ab = filter_valid(pab, h, w, k);
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

MetricReport evaluate_linear(const Image& estimate, const Image& reference) {
  const Image a = clamp(estimate, 0.0, 1.0);
  const Image b = clamp(reference, 0.0, 1.0);
  return {psnr(a, b, 1.0), ssim(a, b)};
}

}  // namespace burstsr
