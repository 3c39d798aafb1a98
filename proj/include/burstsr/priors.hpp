#pragma once

#include <memory>
#include <optional>
#include <string>

#include "burstsr/tensor.hpp"

namespace burstsr {

/// Regularizer seam of the solver. prox(v, t) approximates
///
///   argmin_x 1/2 ||x - v||^2 + t R(x)
///
/// and value(x) returns R(x) when the prox is (near-)exact for a known
/// functional. Implementations are stateless, so one instance can serve
/// concurrent solves.
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  virtual Image prox(const Image& v, double t) const = 0;
  virtual std::optional<double> value(const Image& x) const = 0;
  virtual std::string name() const = 0;

  virtual bool has_value() const { return true; }
};

/// R == 0.
class IdentityPrior final : public Regularizer {
 public:
  Image prox(const Image& v, double t) const override;
  std::optional<double> value(const Image& x) const override;
  std::string name() const override { return "identity"; }
};

/// Isotropic total variation, per channel. Forward differences with a zero
/// gradient on the last row/column.
double total_variation(const Image& x);

class TotalVariationPrior final : public Regularizer {
 public:
  explicit TotalVariationPrior(int inner_iters = 50, double tol = 1e-5);

  /// Fast projected gradient on the dual of the TV-denoising problem; stops
  /// after `inner_iters` or when the primal iterate moves less than `tol`
  /// (max norm).
  Image prox(const Image& v, double t) const override;
  std::optional<double> value(const Image& x) const override;
  std::string name() const override { return "tv"; }

  int inner_iters() const { return inner_iters_; }
  double tol() const { return tol_; }

 private:
  int inner_iters_;
  double tol_;
};

/// Separable Gaussian blur with radius ceil(3 sigma) and replicate borders.
Image gaussian_blur(const Image& v, double sigma);

/// Plug-and-play slot: separable Gaussian blur with sigma = t and radius
/// ceil(3t), replicate borders. Has no associated functional.
class GaussianSmootherPrior final : public Regularizer {
 public:
  Image prox(const Image& v, double t) const override;
  std::optional<double> value(const Image&) const override { return std::nullopt; }
  bool has_value() const override { return false; }
  std::string name() const override { return "smoother"; }
};

std::unique_ptr<Regularizer> make_prior(const std::string& name, int inner_iters = 50,
                                        double tol = 1e-5);

}  // namespace burstsr
