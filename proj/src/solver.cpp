#include "burstsr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace burstsr {
namespace {

constexpr double kSigmaFloor = 1e-6;
constexpr int kSpectralIters = 50;

void check_problem(const Burst& burst, const std::vector<AffineWarp>& warps) {
  if (warps.size() != burst.size()) {
    throw ArgumentError("warp count " + std::to_string(warps.size()) +
                        " does not match burst size " + std::to_string(burst.size()));
  }
}

void require_hr_shape(const Image& x, const Burst& burst, const DegradationConfig& deg) {
  const Index f = 2 * static_cast<Index>(deg.scale);
  if (x.channels() != 3 || x.height() != burst.frame_height() * f ||
      x.width() != burst.frame_width() * f) {
    throw ArgumentError("HR estimate " + to_string(x.shape()) +
                        " inconsistent with burst frames at scale " + std::to_string(deg.scale));
  }
}

Burst residual(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
               const DegradationConfig& deg) {
  const Burst predicted = apply_forward(x, warps, deg);
  std::vector<RawFrame> frames;
  frames.reserve(burst.size());
  for (std::size_t i = 0; i < burst.size(); ++i) {
    frames.emplace_back(burst.frame(i).planes() - predicted.frame(i).planes());
  }
  return Burst(std::move(frames), burst.reference_index());
}

double burst_squared_norm(const Burst& b) {
  double s = 0.0;
  for (const auto& f : b.frames()) s += squared_norm(f.planes());
  return s;
}

// Separable zero-padded Gaussian, applied to every channel.
Image spread(const Image& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  const Index h = img.height(), w = img.width(), ch = img.channels();
  Image tmp(img.shape()), out(img.shape());
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      for (Index d = -radius; d <= radius; ++d) {
        const Index sx = x + d;
        if (sx < 0 || sx >= w) continue;
        const double kd = k[static_cast<std::size_t>(d + radius)];
        for (Index c = 0; c < ch; ++c) tmp(y, x, c) += kd * img(y, sx, c);
      }
    }
  }
  for (Index y = 0; y < h; ++y) {
    for (Index d = -radius; d <= radius; ++d) {
      const Index sy = y + d;
      if (sy < 0 || sy >= h) continue;
      const double kd = k[static_cast<std::size_t>(d + radius)];
      for (Index x = 0; x < w; ++x) {
        for (Index c = 0; c < ch; ++c) out(y, x, c) += kd * tmp(sy, x, c);
      }
    }
  }
  return out;
}

}  // namespace

Extrapolation parse_extrapolation(const std::string& name) {
  if (name == "none") return Extrapolation::none;
  if (name == "fista") return Extrapolation::fista;
  if (name == "list") return Extrapolation::list;
  throw ArgumentError("unknown extrapolation '" + name + "'");
}

std::string to_string(Extrapolation e) {
  switch (e) {
    case Extrapolation::none: return "none";
    case Extrapolation::fista: return "fista";
    case Extrapolation::list: return "list";
  }
  return "none";
}

void SolverConfig::validate() const {
  if (iterations < 1) throw ParameterError("K must be >= 1");
  if (alpha && !(*alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(alpha_margin >= 1.0)) throw ParameterError("alpha margin must be >= 1");
  if (sigma && !(*sigma > 0.0)) throw ParameterError("sigma must be positive");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (prox_strength && !(*prox_strength >= 0.0)) {
    throw ParameterError("prox strength must be >= 0");
  }
  if (extrapolation == Extrapolation::list &&
      weights.size() != static_cast<std::size_t>(iterations)) {
    throw ParameterError("explicit extrapolation needs exactly K weights");
  }
}

Image initialize(const Burst& burst, const std::vector<AffineWarp>& warps,
                 const DegradationConfig& deg) {
  check_problem(burst, warps);
  const double inv_b = 1.0 / static_cast<double>(burst.size());
  const Image back = apply_adjoint(burst, warps, deg) * inv_b;

  std::vector<RawFrame> ones;
  ones.reserve(burst.size());
  for (std::size_t i = 0; i < burst.size(); ++i) {
    ones.emplace_back(Tensor3<double>::constant(burst.frame_height(), burst.frame_width(), 4, 1.0));
  }
  const Image coverage = apply_adjoint(Burst(std::move(ones)), warps, deg) * inv_b;

  const double sigma = static_cast<double>(deg.scale);
  const Image num = spread(back, sigma);
  const Image den = spread(coverage, sigma);
  Image x0(back.shape());
  const double floor = 1e-9 * std::max(den.array().maxCoeff(), 1e-300);
  for (Index i = 0; i < x0.size(); ++i) {
    const double d = den.array()[i];
    x0.array()[i] = d > floor ? num.array()[i] / d : 0.0;
  }
  return clamp(std::move(x0), 0.0, 1.0);
}

Image gradient_step(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                    const DegradationConfig& deg, double step) {
  check_problem(burst, warps);
  require_hr_shape(x, burst, deg);
  return x + apply_adjoint(residual(x, burst, warps, deg), warps, deg) * step;
}

Image gradient_step(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                    const DegradationConfig& deg) {
  return gradient_step(x, burst, warps, deg, 1.0 / static_cast<double>(burst.size()));
}

double residual_norm(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                     const DegradationConfig& deg) {
  check_problem(burst, warps);
  require_hr_shape(x, burst, deg);
  return std::sqrt(burst_squared_norm(residual(x, burst, warps, deg)));
}

double data_fidelity(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                     const DegradationConfig& deg, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  check_problem(burst, warps);
  require_hr_shape(x, burst, deg);
  const double b = static_cast<double>(burst.size());
  return burst_squared_norm(residual(x, burst, warps, deg)) / (2.0 * sigma * sigma * b);
}

double objective(const Image& x, const Burst& burst, const std::vector<AffineWarp>& warps,
                 const Regularizer& prior, double lambda, const DegradationConfig& deg,
                 double sigma) {
  const auto r = prior.value(x);
  if (!r) throw CapabilityError("prior '" + prior.name() + "' has no objective value");
  return data_fidelity(x, burst, warps, deg, sigma) + lambda * *r;
}

double estimate_sigma(const Burst& burst) {
  const auto& p = burst.reference().planes();
  std::vector<double> detail;
  detail.reserve(static_cast<std::size_t>(p.size() / 4));
  for (Index y = 0; y + 1 < p.height(); y += 2) {
    for (Index x = 0; x + 1 < p.width(); x += 2) {
      for (Index c = 0; c < p.channels(); ++c) {
        detail.push_back(0.5 * (p(y, x, c) - p(y, x + 1, c) - p(y + 1, x, c) + p(y + 1, x + 1, c)));
      }
    }
  }
  if (detail.empty()) return 0.0;
  auto median = [](std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
  };
  const double centre = median(detail);
  for (double& d : detail) d = std::abs(d - centre);
  return median(std::move(detail)) / 0.6745;
}

std::vector<double> fista_weights(int count) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(std::max(count, 0)));
  double t_prev = 1.0;
  for (int k = 1; k <= count; ++k) {
    const double t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
    w.push_back((t_prev - 1.0) / t);
    t_prev = t;
  }
  return w;
}

SolveReport reconstruct(const Burst& burst, const std::vector<AffineWarp>& warps,
                        const Regularizer& prior, const SolverConfig& cfg,
                        const DegradationConfig& deg) {
  cfg.validate();
  deg.validate();
  check_problem(burst, warps);
  const int K = cfg.iterations;
  const double b = static_cast<double>(burst.size());

  SolveReport report;
  if (cfg.alpha) {
    report.alpha = *cfg.alpha;
  } else if (cfg.measured_alpha) {
    const Index r2 = 2 * static_cast<Index>(deg.scale);
    report.alpha = cfg.alpha_margin *
                   operator_norm_estimate(warps, deg, burst.frame_height() * r2,
                                          burst.frame_width() * r2, kSpectralIters);
  } else {
    report.alpha = b;
  }
  report.sigma = cfg.sigma ? *cfg.sigma : std::max(estimate_sigma(burst), kSigmaFloor);
  report.prox_strength = cfg.prox_strength
                             ? *cfg.prox_strength
                             : cfg.lambda * report.sigma * report.sigma * b / report.alpha;
  const bool guard = cfg.monotone_guard.value_or(prior.has_value());
  if (guard && !prior.has_value()) {
    throw CapabilityError("monotone guard needs a prior with an objective value");
  }
  if (guard && report.alpha < b && !(cfg.measured_alpha && !cfg.alpha)) {
    throw ParameterError("monotone guard requires alpha >= B");
  }
  const double step = 1.0 / report.alpha;
  const double t = report.prox_strength;

  auto eval_objective = [&](const Image& x) -> std::optional<double> {
    if (!prior.has_value()) return std::nullopt;
    return objective(x, burst, warps, prior, cfg.lambda, deg, report.sigma);
  };
  auto mm_step = [&](const Image& from) { return prior.prox(gradient_step(from, burst, warps, deg, step), t); };

  Image x = initialize(burst, warps, deg);
  report.initial_data_fidelity = data_fidelity(x, burst, warps, deg, report.sigma);
  report.initial_objective = eval_objective(x);
  report.initial_residual = residual_norm(x, burst, warps, deg);

  const std::vector<double> fista = fista_weights(K);
  std::size_t fista_pos = 0;
  std::optional<double> j_prev = report.initial_objective;
  Image x_hat = x;
  bool extrapolated = false;

  for (int k = 0; k < K; ++k) {
    IterationRecord rec;
    Image x_next = mm_step(x_hat);
    std::optional<double> j_next = eval_objective(x_next);
    if (guard && extrapolated && *j_next > *j_prev) {
      // The extrapolated point made things worse: fall back to the plain
      // majorization step from x^k and restart the momentum.
      x_next = mm_step(x);
      j_next = eval_objective(x_next);
      rec.guard_triggered = true;
      fista_pos = 0;
    }

    if (!x_next.all_finite()) {
      throw NumericError("non-finite iterate at iteration " + std::to_string(k + 1));
    }

    double w = 0.0;
    if (cfg.extrapolation == Extrapolation::fista) {
      w = fista[std::min(fista_pos, fista.size() - 1)];
      ++fista_pos;
    } else if (cfg.extrapolation == Extrapolation::list) {
      w = cfg.weights[static_cast<std::size_t>(k)];
    }
    extrapolated = w != 0.0;
    x_hat = extrapolated ? x_next + (x_next - x) * w : x_next;

    rec.weight = w;
    rec.step_norm = norm(x_next - x);
    rec.residual_norm = residual_norm(x_next, burst, warps, deg);
    rec.data_fidelity = data_fidelity(x_next, burst, warps, deg, report.sigma);
    rec.objective = j_next;
    if (!std::isfinite(rec.data_fidelity) || (j_next && !std::isfinite(*j_next))) {
      throw NumericError("non-finite objective at iteration " + std::to_string(k + 1));
    }
    report.iterations.push_back(rec);
    x = std::move(x_next);
    j_prev = j_next;
  }
  report.x_final = clamp(std::move(x), 0.0, 1.0);
  return report;
}

}  // namespace burstsr
