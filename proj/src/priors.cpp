#include "burstsr/priors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace burstsr {
namespace {

void require_nonnegative(double t) {
  if (!(t >= 0.0)) throw ParameterError("prox strength must be >= 0");
}

// Dual field (p1, p2) per pixel and channel, same layout as the image.
struct DualField {
  Image p1;
  Image p2;
};

// Forward-difference gradient, zero on the last row/column.
void gradient(const Image& x, Image& gx, Image& gy) {
  const Index h = x.height(), w = x.width(), ch = x.channels();
  for (Index y = 0; y < h; ++y) {
    for (Index i = 0; i < w; ++i) {
      for (Index c = 0; c < ch; ++c) {
        gx(y, i, c) = i + 1 < w ? x(y, i + 1, c) - x(y, i, c) : 0.0;
        gy(y, i, c) = y + 1 < h ? x(y + 1, i, c) - x(y, i, c) : 0.0;
      }
    }
  }
}

// Negative adjoint of gradient().
void divergence(const Image& p1, const Image& p2, Image& div) {
  const Index h = p1.height(), w = p1.width(), ch = p1.channels();
  for (Index y = 0; y < h; ++y) {
    for (Index i = 0; i < w; ++i) {
      for (Index c = 0; c < ch; ++c) {
        double d = 0.0;
        if (i + 1 < w) d += p1(y, i, c);
        if (i > 0) d -= p1(y, i - 1, c);
        if (y + 1 < h) d += p2(y, i, c);
        if (y > 0) d -= p2(y - 1, i, c);
        div(y, i, c) = d;
      }
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Image IdentityPrior::prox(const Image& v, double t) const {
  require_nonnegative(t);
  return v;
}

std::optional<double> IdentityPrior::value(const Image&) const { return 0.0; }

double total_variation(const Image& x) {
  Image gx(x.shape()), gy(x.shape());
  gradient(x, gx, gy);
  return (gx.array().square() + gy.array().square()).sqrt().sum();
}

TotalVariationPrior::TotalVariationPrior(int inner_iters, double tol)
    : inner_iters_(inner_iters), tol_(tol) {
  if (inner_iters < 1) throw ParameterError("TV prox needs at least one inner iteration");
  if (!(tol >= 0.0)) throw ParameterError("TV tolerance must be >= 0");
}

// Dual problem: min_{|p| <= 1} 1/2 || v - t div p ||^2. The gradient of
// div is bounded by 8, hence the 1/(8t) step on p.
Image TotalVariationPrior::prox(const Image& v, double t) const {
  require_nonnegative(t);
  if (t == 0.0) return v;

  const Shape shape = v.shape();
  DualField p{Image(shape), Image(shape)};
  DualField q = p;  // extrapolated point
  Image div(shape), gx(shape), gy(shape);
  Image x = v;
  Image x_prev = v;
  double momentum = 1.0;
  const double step = 1.0 / (8.0 * t);

  for (int it = 0; it < inner_iters_; ++it) {
    divergence(q.p1, q.p2, div);
    x.array() = v.array() + t * div.array();
    gradient(x, gx, gy);

    DualField next{Image(shape), Image(shape)};
    const Index n = v.size();
    for (Index k = 0; k < n; ++k) {
      const double a = q.p1.array()[k] + step * gx.array()[k];
      const double b = q.p2.array()[k] + step * gy.array()[k];
      const double scale = std::max(1.0, std::hypot(a, b));
      next.p1.array()[k] = a / scale;
      next.p2.array()[k] = b / scale;
    }

    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double w = (momentum - 1.0) / momentum_next;
    q.p1.array() = next.p1.array() + w * (next.p1.array() - p.p1.array());
    q.p2.array() = next.p2.array() + w * (next.p2.array() - p.p2.array());
    p = std::move(next);
    momentum = momentum_next;

    divergence(p.p1, p.p2, div);
    x.array() = v.array() + t * div.array();
    const double change = (x.array() - x_prev.array()).abs().maxCoeff();
    x_prev = x;
    if (change < tol_) break;
  }
  divergence(p.p1, p.p2, div);
  x.array() = v.array() + t * div.array();
  return x;
}

std::optional<double> TotalVariationPrior::value(const Image& x) const {
  return total_variation(x);
}

Image GaussianSmootherPrior::prox(const Image& v, double t) const {
  require_nonnegative(t);
  return gaussian_blur(v, t);
}

Image gaussian_blur(const Image& v, double sigma) {
  if (!(sigma >= 0.0)) throw ParameterError("blur sigma must be >= 0");
  if (sigma == 0.0) return v;
  const std::vector<double> k = gaussian_kernel(sigma);
  const auto radius = static_cast<Index>(k.size() / 2);
  const Index h = v.height(), w = v.width(), ch = v.channels();

  Image tmp(v.shape()), out(v.shape());
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      for (Index c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d) {
          const Index sx = std::clamp<Index>(x + d, 0, w - 1);
          acc += k[static_cast<std::size_t>(d + radius)] * v(y, sx, c);
        }
        tmp(y, x, c) = acc;
      }
    }
  }
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      for (Index c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d) {
          const Index sy = std::clamp<Index>(y + d, 0, h - 1);
          acc += k[static_cast<std::size_t>(d + radius)] * tmp(sy, x, c);
        }
        out(y, x, c) = acc;
      }
    }
  }
  return out;
}

std::unique_ptr<Regularizer> make_prior(const std::string& name, int inner_iters, double tol) {
  if (name == "identity" || name == "none") return std::make_unique<IdentityPrior>();
  if (name == "tv") return std::make_unique<TotalVariationPrior>(inner_iters, tol);
  if (name == "smoother" || name == "gaussian") return std::make_unique<GaussianSmootherPrior>();
  throw ArgumentError("unknown prior '" + name + "'");
}

}  // namespace burstsr
