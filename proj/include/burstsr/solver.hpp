#pragma once

#include <optional>
#include <string>
#include <vector>

#include "burstsr/forward_model.hpp"
#include "burstsr/priors.hpp"
#include "burstsr/tensor.hpp"
#include "burstsr/warp.hpp"

namespace burstsr {

enum class Extrapolation { none, fista, list };

Extrapolation parse_extrapolation(const std::string& name);
std::string to_string(Extrapolation e);

struct SolverConfig {
  int iterations = 10;
  /// Majorizer constant; defaults to the burst size.
  std::optional<double> alpha;
  /// When alpha is unset, use alpha_margin times a power-iteration estimate
  /// of ||A^T A|| instead of the burst size.
  bool measured_alpha = false;
  double alpha_margin = 1.01;
  /// Noise level of the data term; estimated from the burst when absent.
  std::optional<double> sigma;
  double lambda = 0.002;
  /// Explicit prox parameter; otherwise lambda * sigma^2 * B / alpha.
  std::optional<double> prox_strength;
  Extrapolation extrapolation = Extrapolation::none;
  /// w^(1..K) when extrapolation == list.
  std::vector<double> weights;
  /// Defaults to on iff the prior has a value().
  std::optional<bool> monotone_guard;

  void validate() const;
};

struct IterationRecord {
  double data_fidelity = 0.0;
  std::optional<double> objective;
  double residual_norm = 0.0;
  double step_norm = 0.0;
  double weight = 0.0;
  bool guard_triggered = false;
};

struct SolveReport {
  Image x_final;
  std::vector<IterationRecord> iterations;
  double initial_data_fidelity = 0.0;
  std::optional<double> initial_objective;
  double initial_residual = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
  double prox_strength = 0.0;
};

/// Coverage-normalised back-projection: per colour plane, a Gaussian
/// (sigma = scale HR px) spread of A^T y divided by the same spread of the
/// sampling coverage A^T 1, clamped to [0,1]. Exact on constant scenes.
Image initialize(const Burst& burst, const std::vector<AffineWarp>& warps,
                 const DegradationConfig& deg);

/// z = x + (1/B) sum_i S_i^T H^T M^T (y_i - M H S_i x).
Image gradient_step(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                    const DegradationConfig& deg);

/// Same with an explicit step in place of 1/B (1/alpha inside the solver).
Image gradient_step(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                    const DegradationConfig& deg, double step);

/// ||y - A x|| over the whole burst.
double residual_norm(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                     const DegradationConfig& deg);

/// 1/(2 sigma^2 B) sum_i ||y_i - M H S_i x||^2.
double data_fidelity(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                     const DegradationConfig& deg, double sigma);

/// data_fidelity + lambda R(x). Throws CapabilityError if the prior has no
/// value().
double objective(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                 const Regularizer& prior, double lambda, const DegradationConfig& deg,
                 double sigma);

/// Robust noise estimate: MAD of the 2x2 Haar high-high coefficients of the
/// reference frame, divided by 0.6745.
double estimate_sigma(const Burst& burst);

/// w_k = (t_{k-1} - 1) / t_k with t_0 = 1, for k = 1..count.
std::vector<double> fista_weights(int count);

/// K rounds of gradient step, prox and extrapolation from initialize().
/// Throws NumericError naming the iteration if an iterate turns non-finite.
SolveReport reconstruct(const Burst& burst, const std::vector<AffineWarp>& warps,
                        const Regularizer& prior, const SolverConfig& cfg,
                        const DegradationConfig& deg);

}  // namespace burstsr
