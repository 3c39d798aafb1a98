#include "burstsr/alignment.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>

#include "burstsr/forward_model.hpp"
#include "burstsr/priors.hpp"

namespace burstsr {
namespace {

// Below this |rho| * sqrt(pixels) the match is indistinguishable from the
// correlation of unrelated images.
constexpr double kSignificance = 5.0;
constexpr int kMaxStepHalvings = 40;

// Rotation angle about the image center plus translation. The translation
// model keeps angle == 0.
struct Motion {
  double angle = 0.0;
  double tx = 0.0;
  double ty = 0.0;
};

AffineWarp to_warp(const Motion& m, const Image& img) {
  return AffineWarp::euclidean(m.angle, m.tx, m.ty, 0.5 * static_cast<double>(img.width()),
                               0.5 * static_cast<double>(img.height()));
}

struct Gradients {
  Image gx;
  Image gy;
};

Gradients central_gradients(const Image& img) {
  Gradients g{Image(img.shape()), Image(img.shape())};
  for (Index y = 1; y + 1 < img.height(); ++y) {
    for (Index x = 1; x + 1 < img.width(); ++x) {
      g.gx(y, x, 0) = 0.5 * (img(y, x + 1, 0) - img(y, x - 1, 0));
      g.gy(y, x, 0) = 0.5 * (img(y + 1, x, 0) - img(y - 1, x, 0));
    }
  }
  return g;
}

class EccProblem {
 public:
  EccProblem(const Image& reference, const Image& target, MotionModel model, Index margin)
      : reference_(reference),
        target_(target),
        model_(model),
        margin_(margin),
        grad_(central_gradients(target)) {}

  int dof() const { return model_ == MotionModel::translation ? 2 : 3; }

  // Correlation only (for step acceptance).
  std::optional<double> rho(const Motion& m) const {
    Eigen::VectorXd iw, jr;
    if (!sample(m, iw, jr, nullptr)) return std::nullopt;
    return correlation(iw, jr);
  }

  // Gauss-Newton increment of the ECC objective at `m`, with the current
  // correlation. nullopt when the linearisation is unusable.
  std::optional<std::pair<Eigen::VectorXd, double>> step(const Motion& m) const {
    Eigen::VectorXd iw, jr;
    Eigen::MatrixXd jac;
    if (!sample(m, iw, jr, &jac)) return std::nullopt;
    const double rho = correlation(iw, jr);

    const Eigen::MatrixXd hessian = jac.transpose() * jac;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) return std::nullopt;
    const Eigen::VectorXd image_proj = jac.transpose() * iw;
    const Eigen::VectorXd template_proj = jac.transpose() * jr;
    const Eigen::VectorXd image_proj_h = ldlt.solve(image_proj);
    const double lambda_n = iw.squaredNorm() - image_proj.dot(image_proj_h);
    const double lambda_d = iw.dot(jr) - template_proj.dot(image_proj_h);
    if (!(lambda_d > 0.0)) return std::nullopt;
    const Eigen::VectorXd error = (lambda_n / lambda_d) * jr - iw;
    return std::make_pair(Eigen::VectorXd(ldlt.solve(jac.transpose() * error)), rho);
  }

  std::size_t valid_pixels(const Motion& m) const {
    Eigen::VectorXd iw, jr;
    sample(m, iw, jr, nullptr);
    return static_cast<std::size_t>(iw.size());
  }

 private:
  static double correlation(const Eigen::VectorXd& iw, const Eigen::VectorXd& jr) {
    const double denom = iw.norm() * jr.norm();
    return denom > 0.0 ? iw.dot(jr) / denom : 0.0;
  }

  // Zero-mean warped target, zero-mean reference and (optionally) the
  // zero-mean Jacobian of the warped target w.r.t. the motion parameters,
  // restricted to pixels that sit, together with their source, at least
  // margin_ pixels inside the image.
  bool sample(const Motion& m, Eigen::VectorXd& iw, Eigen::VectorXd& jr,
              Eigen::MatrixXd* jac) const {
    const AffineWarp w = to_warp(m, target_);
    const Index width = target_.width(), height = target_.height();
    const double cx = 0.5 * static_cast<double>(width), cy = 0.5 * static_cast<double>(height);
    const double s = std::sin(m.angle), c = std::cos(m.angle);

    std::vector<double> vi, vj;
    std::vector<Eigen::Vector3d> rows;
    vi.reserve(static_cast<std::size_t>(width * height));
    vj.reserve(vi.capacity());
    const auto lo = static_cast<double>(margin_);
    const double hi_x = static_cast<double>(width - 1 - margin_);
    const double hi_y = static_cast<double>(height - 1 - margin_);
    for (Index y = margin_ - 1; y <= height - margin_; ++y) {
      for (Index x = margin_ - 1; x <= width - margin_; ++x) {
        const auto src = detail::warp_source(w, x, y);
        if (!(src.x() >= lo && src.x() <= hi_x && src.y() >= lo && src.y() <= hi_y)) {
          continue;
        }
        double v = 0.0, gx = 0.0, gy = 0.0;
        auto tap = [&](Index sx, Index sy, double weight) {
          v += weight * target_(sy, sx, 0);
          gx += weight * grad_.gx(sy, sx, 0);
          gy += weight * grad_.gy(sy, sx, 0);
        };
        detail::for_each_bilinear_tap(src.x(), src.y(), width, height, tap);
        vi.push_back(v);
        vj.push_back(reference_(y, x, 0));
        if (jac) {
          const double dx = static_cast<double>(x) + 0.5 - cx;
          const double dy = static_cast<double>(y) + 0.5 - cy;
          const double d_angle = gx * (-s * dx - c * dy) + gy * (c * dx - s * dy);
          rows.emplace_back(d_angle, gx, gy);
        }
      }
    }
    const auto n = static_cast<Index>(vi.size());
    if (n < 16) return false;
    iw = Eigen::Map<Eigen::VectorXd>(vi.data(), n);
    jr = Eigen::Map<Eigen::VectorXd>(vj.data(), n);
    iw.array() -= iw.mean();
    jr.array() -= jr.mean();
    if (jac) {
      jac->resize(n, dof());
      for (Index i = 0; i < n; ++i) {
        if (model_ == MotionModel::translation) {
          (*jac)(i, 0) = rows[static_cast<std::size_t>(i)][1];
          (*jac)(i, 1) = rows[static_cast<std::size_t>(i)][2];
        } else {
          jac->row(i) = rows[static_cast<std::size_t>(i)].transpose();
        }
      }
      jac->rowwise() -= jac->colwise().mean();
    }
    return true;
  }

  const Image& reference_;
  const Image& target_;
  MotionModel model_;
  Index margin_;
  Gradients grad_;
};

Motion advance(const Motion& m, const Eigen::VectorXd& delta, MotionModel model, double scale) {
  Motion out = m;
  if (model == MotionModel::translation) {
    out.tx += scale * delta[0];
    out.ty += scale * delta[1];
  } else {
    out.angle += scale * delta[0];
    out.tx += scale * delta[1];
    out.ty += scale * delta[2];
  }
  return out;
}

struct EccRun {
  Motion motion;
  double rho = 0.0;
  bool converged = false;
  int iterations = 0;
};

void require_single_channel(const Image& img, const char* what) {
  if (img.channels() != 1) {
    throw DimensionError(std::string(what) + " must be single-channel");
  }
}

EccRun run_ecc(const Image& reference, const Image& target, MotionModel model,
               const Motion& start, int max_iters, double eps, Index margin) {
  require_single_channel(reference, "ECC reference");
  require_single_channel(target, "ECC target");
  reference.require_same_shape(target);
  const auto& r = reference.array();
  if ((r - r.mean()).square().sum() <= 1e-20 * static_cast<double>(r.size())) {
    throw AlignmentError("ECC reference image has zero variance");
  }

  EccProblem problem(reference, target, model, margin);
  EccRun run;
  run.motion = start;
  const auto initial_rho = problem.rho(start);
  if (!initial_rho) return run;
  run.rho = *initial_rho;

  bool eps_fired = false;
  for (int it = 0; it < max_iters; ++it) {
    run.iterations = it + 1;
    const auto step = problem.step(run.motion);
    if (!step) break;
    const Eigen::VectorXd& delta = step->first;
    if (!delta.allFinite()) break;
    // Halve until rho does not decrease. If even an increment below eps
    // cannot improve rho, the iterate is stationary at that tolerance.
    double factor = 1.0;
    bool accepted = false;
    for (int h = 0; h <= kMaxStepHalvings; ++h, factor *= 0.5) {
      const Motion trial = advance(run.motion, delta, model, factor);
      const auto trial_rho = problem.rho(trial);
      if (trial_rho && *trial_rho >= run.rho) {
        run.motion = trial;
        run.rho = *trial_rho;
        accepted = true;
        break;
      }
      if (factor * delta.norm() < eps) break;
    }
    if (factor * delta.norm() < eps) {
      eps_fired = true;
      break;
    }
    if (!accepted) break;
  }

  const std::size_t n = problem.valid_pixels(run.motion);
  const double half_extent = 0.5 * static_cast<double>(std::min(target.width(), target.height()));
  const bool plausible = std::isfinite(run.rho) &&
                         run.rho * std::sqrt(static_cast<double>(n)) >= kSignificance &&
                         std::hypot(run.motion.tx, run.motion.ty) <= half_extent &&
                         2 * n >= static_cast<std::size_t>((target.width() - 2 * margin) *
                                                           (target.height() - 2 * margin));
  run.converged = eps_fired && run.rho >= *initial_rho && plausible;
  return run;
}

// 2x2 box decimation; an odd trailing row/column is dropped.
Image decimate(const Image& img) {
  Image out(img.height() / 2, img.width() / 2, 1);
  for (Index y = 0; y < out.height(); ++y) {
    for (Index x = 0; x < out.width(); ++x) {
      out(y, x, 0) = 0.25 * (img(2 * y, 2 * x, 0) + img(2 * y, 2 * x + 1, 0) +
                             img(2 * y + 1, 2 * x, 0) + img(2 * y + 1, 2 * x + 1, 0));
    }
  }
  return out;
}

}  // namespace

MotionModel parse_motion_model(const std::string& name) {
  if (name == "translation") return MotionModel::translation;
  if (name == "euclidean") return MotionModel::euclidean;
  throw ArgumentError("unknown motion model '" + name + "'");
}

std::string to_string(MotionModel model) {
  return model == MotionModel::translation ? "translation" : "euclidean";
}

Image raw_to_luma(const RawFrame& frame) {
  Image luma(frame.height(), frame.width(), 1);
  const auto& p = frame.planes();
  for (Index y = 0; y < frame.height(); ++y) {
    for (Index x = 0; x < frame.width(); ++x) {
      luma(y, x, 0) = 0.25 * (p(y, x, 0) + p(y, x, 1) + p(y, x, 2) + p(y, x, 3));
    }
  }
  return luma;
}

EccResult ecc_align(const Image& reference, const Image& target, MotionModel model,
                    int max_iters, double eps) {
  const EccRun run = run_ecc(reference, target, model, Motion{}, max_iters, eps, 1);
  return {to_warp(run.motion, target), run.rho, run.converged, run.iterations};
}

AlignmentResult align_burst(const Burst& burst, int scale, const AlignmentConfig& cfg) {
  if (scale < 1) throw ParameterError("scale must be >= 1");
  if (cfg.pyramid_levels < 1) throw ParameterError("pyramid needs at least one level");
  if (!(cfg.min_rho >= -1.0 && cfg.min_rho <= 1.0)) throw ParameterError("min_rho must lie in [-1, 1]");
  if (!(cfg.prefilter_sigma >= 0.0)) throw ParameterError("prefilter sigma must be >= 0");

  auto pyramid_of = [&](const RawFrame& frame) {
    std::vector<Image> levels{gaussian_blur(raw_to_luma(frame), cfg.prefilter_sigma)};
    for (int l = 1; l < cfg.pyramid_levels; ++l) {
      if (levels.back().height() < 16 || levels.back().width() < 16) break;
      levels.push_back(decimate(levels.back()));
    }
    return levels;
  };

  const std::vector<Image> ref_pyr = pyramid_of(burst.reference());
  // Warped frames go dark at their edges and the prefilter spreads that
  // darkness inwards, so matching skips a band covering both.
  const auto base_margin =
      std::max<Index>(2, static_cast<Index>(std::ceil(3.0 * cfg.prefilter_sigma)));
  const std::size_t count = burst.size();
  const std::size_t ref = burst.reference_index();
  std::vector<Image> lumas(count);
  std::vector<Motion> motions(count);
  std::vector<char> converged(count, 0);
  std::vector<double> rhos(count, 0.0);
  lumas[ref] = ref_pyr.front();
  converged[ref] = 1;
  rhos[ref] = 1.0;

  for (std::size_t i = 0; i < count; ++i) {
    if (i == ref) continue;
    const std::vector<Image> pyr = pyramid_of(burst.frame(i));
    lumas[i] = pyr.front();
    Motion motion;
    EccRun run;
    bool failed = false;
    for (auto level = static_cast<int>(ref_pyr.size()) - 1; level >= 0; --level) {
      try {
        run = run_ecc(ref_pyr[static_cast<std::size_t>(level)],
                      pyr[static_cast<std::size_t>(level)], cfg.model, motion, cfg.max_iters,
                      cfg.eps, std::max<Index>(1, (base_margin + (1 << level) - 1) >> level));
      } catch (const AlignmentError&) {
        failed = true;
        break;
      }
      motion = run.motion;
      if (level > 0) {
        motion.tx *= 2.0;
        motion.ty *= 2.0;
      }
    }
    if (!failed && run.converged && run.rho >= cfg.min_rho) {
      motions[i] = run.motion;
      converged[i] = 1;
    }
    rhos[i] = failed ? 0.0 : run.rho;
  }

  // ECC warps map reference pixels into each frame; the solver wants the
  // opposite direction on the HR grid, which is 2 * scale times finer.
  const double to_hr = 2.0 * static_cast<double>(scale);
  AlignmentResult result;
  for (std::size_t i = 0; i < count; ++i) {
    if (i != ref && converged[i]) {
      result.warps.push_back(to_warp(motions[i], lumas[i]).inverse().rescaled(to_hr));
    } else {
      result.warps.push_back(AffineWarp::identity());
    }
    result.converged.push_back(converged[i] != 0);
    result.final_rho.push_back(rhos[i]);
  }
  return result;
}

}  // namespace burstsr
