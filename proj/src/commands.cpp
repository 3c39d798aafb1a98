#include "burstsr/commands.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "burstsr/forward_model.hpp"
#include "burstsr/io.hpp"
#include "burstsr/metrics.hpp"
#include "burstsr/priors.hpp"
#include "burstsr/scene.hpp"
#include "burstsr/solver.hpp"

namespace burstsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kSceneSeedStream = 101;
constexpr std::uint32_t kSelftestStream = 102;

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

class TaggedLog {
 public:
  explicit TaggedLog(std::ostream& os) : os_(os) {}
  void line(const std::string& tag, const std::string& msg) {
    std::lock_guard lock(mu_);
    os_ << '[' << tag << "] " << msg << '\n';
  }

 private:
  std::ostream& os_;
  std::mutex mu_;
};

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

fs::path report_path_for(const fs::path& out) {
  fs::path p = out;
  return p.replace_extension(".csv");
}

int cmd_synthesize(const SynthesizeOptions& opts, std::ostream& log) {
  const auto inputs = list_pngs(opts.input);
  if (inputs.empty()) {
    log << "no PNG files in " << opts.input.string() << '\n';
    return 1;
  }
  fs::create_directories(opts.out);

  TaggedLog tagged(log);
  std::vector<char> ok(inputs.size(), 0);
  parallel_for(inputs.size(), opts.jobs, [&](std::size_t i) {
    const std::string tag = inputs[i].stem().string();
    try {
      const Image srgb = read_srgb_png(inputs[i]);
      if (srgb.height() % (2 * opts.scale) != 0 || srgb.width() % (2 * opts.scale) != 0) {
        tagged.line(tag, "warning: " + to_string(srgb.shape()) + " not divisible by " +
                             std::to_string(2 * opts.scale) + ", skipped");
        return;
      }
      SynthConfig cfg;
      cfg.burst_size = opts.burst;
      cfg.scale = opts.scale;
      cfg.max_translation = opts.max_translation;
      cfg.max_rotation = opts.max_rotation;
      cfg.shot_range = opts.noise_shot;
      cfg.read_range = opts.noise_read;
      cfg.randomize_gains = opts.randomize_gains;
      cfg.seed = make_stream(opts.seed, kSceneSeedStream, static_cast<std::uint32_t>(i))();
      const SynthesizedScene scene = synthesize(srgb, cfg);
      write_scene(opts.out / tag, scene, cfg.seed, cfg.scale);
      ok[i] = 1;
      tagged.line(tag, std::to_string(scene.burst.size()) + " frames of " +
                           to_string(scene.burst.frame(0).planes().shape()) + " from " +
                           to_string(scene.gt.shape()));
    } catch (const Error& e) {
      tagged.line(tag, std::string("warning: ") + e.what());
    }
  });
  return std::any_of(ok.begin(), ok.end(), [](char c) { return c != 0; }) ? 0 : 1;
}

int cmd_align(const AlignOptions& opts, std::ostream& log) {
  const LoadedScene scene = load_scene(opts.scene, false);
  const AlignmentResult result = align_burst(scene.burst, scene.manifest.scale, opts.config);
  write_json(opts.scene / "warps.json", to_json(result));
  const auto failed = std::count(result.converged.begin(), result.converged.end(), false);
  log << "aligned " << result.warps.size() << " frames (" << failed
      << " fell back to identity) -> " << (opts.scene / "warps.json").string() << '\n';
  return 0;
}

int cmd_reconstruct(const ReconstructOptions& opts, std::ostream& log) {
  const LoadedScene scene = load_scene(opts.scene, false);
  const SolverSetup setup = load_solver_setup(opts.config);

  std::vector<AffineWarp> warps;
  if (opts.use_gt_warps) {
    warps = scene.manifest.warps;
  } else {
    const fs::path wp = opts.scene / "warps.json";
    if (!fs::exists(wp)) {
      throw IoError(wp.string() + " not found; run `align` first or pass --use-gt-warps");
    }
    warps = alignment_from_json(read_json(wp)).warps;
  }

  const SolveReport report = reconstruct(scene.burst, warps, *setup.prior, setup.config,
                                         DegradationConfig{scene.manifest.scale});
  if (opts.out.has_parent_path()) fs::create_directories(opts.out.parent_path());
  write_tensor(report.x_final, opts.out);
  write_report_csv(report_path_for(opts.out), report);
  if (opts.png) write_png(linear_raw_to_srgb(report.x_final, scene.manifest.camera), *opts.png);

  log << "reconstructed " << to_string(report.x_final.shape()) << " in "
      << report.iterations.size() << " iterations; residual " << report.initial_residual
      << " -> " << report.iterations.back().residual_norm << '\n';
  return 0;
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
  std::vector<fs::path> scenes;
  const bool single = is_scene_dir(opts.scene);
  if (single) {
    scenes.push_back(opts.scene);
  } else {
    if (!fs::is_directory(opts.scene)) throw IoError(opts.scene.string() + " not found");
    for (const auto& e : fs::directory_iterator(opts.scene)) {
      if (e.is_directory() && is_scene_dir(e.path())) scenes.push_back(e.path());
    }
    std::sort(scenes.begin(), scenes.end());
    if (scenes.empty()) throw IoError("no scenes under " + opts.scene.string());
  }

  json per_scene = json::array();
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& dir : scenes) {
    fs::path sr_path = opts.sr;
    if (!single || (sr_path.is_relative() && !fs::exists(sr_path))) sr_path = dir / opts.sr;
    const LoadedScene scene = load_scene(dir, true);
    const Image sr = read_tensor<double>(sr_path);
    if (!(sr.shape() == scene.gt->shape())) {
      throw DimensionError("SR " + to_string(sr.shape()) + " vs ground truth " +
                           to_string(scene.gt->shape()));
    }
    const MetricReport m = evaluate_linear(sr, *scene.gt);
    psnr_sum += m.psnr;
    ssim_sum += m.ssim;
    per_scene.push_back({{"scene", dir.filename().string()},
                         {"psnr", metric_value(m.psnr)},
                         {"ssim", m.ssim}});
    if (!single) {
      write_json(dir / "metrics.json", json{{"version", kSchemaVersion},
                                            {"psnr", metric_value(m.psnr)},
                                            {"ssim", m.ssim},
                                            {"lpips", "unavailable"}});
    }
    log << dir.filename().string() << ": PSNR " << m.psnr << " dB, SSIM " << m.ssim << '\n';
  }
  const double n = static_cast<double>(scenes.size());
  json doc{{"version", kSchemaVersion},
           {"scenes", per_scene},
           {"mean", {{"psnr", metric_value(psnr_sum / n)}, {"ssim", ssim_sum / n}}},
           {"lpips", "unavailable"}};
  if (single) {
    doc["psnr"] = per_scene[0]["psnr"];
    doc["ssim"] = per_scene[0]["ssim"];
  }
  write_json(opts.scene / "metrics.json", doc);
  return 0;
}

int cmd_selftest(const SelftestOptions& opts, std::ostream& log) {
  if (opts.size < 16 || opts.size % 8 != 0) {
    throw ArgumentError("selftest size must be a multiple of 8 and >= 16");
  }
  if (opts.trials < 1) throw ArgumentError("selftest needs at least one trial");
  if (!opts.fault.empty() && opts.fault != "warp_adjoint") {
    throw ArgumentError("unknown fault hook '" + opts.fault + "'");
  }
  const bool broken = opts.fault == "warp_adjoint";
  const Index n = opts.size;
  auto rng = make_stream(opts.seed, kSelftestStream);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random_image = [&](Index h, Index w, Index c) {
    Image t(h, w, c);
    for (Index i = 0; i < t.size(); ++i) t.array()[i] = uni(rng);
    return t;
  };
  auto random_warp = [&] {
    return AffineWarp::euclidean(uni(rng) * 0.09, 3.0 * uni(rng), 3.0 * uni(rng),
                                 0.5 * static_cast<double>(n), 0.5 * static_cast<double>(n));
  };
  auto warp_t = [&](const Image& img, const AffineWarp& w) {
    return broken ? warp(img, w.inverse()) : warp_adjoint(img, w);
  };
  auto rel = [](double lhs, double rhs, double nx, double ny) { return std::abs(lhs - rhs) / (nx * ny); };

  double err_warp = 0, err_down = 0, err_mosaick = 0, err_composite = 0;
  for (int t = 0; t < opts.trials; ++t) {
    {
      const Image x = random_image(n, n, 3), y = random_image(n, n, 3);
      const AffineWarp w = random_warp();
      err_warp = std::max(err_warp, rel(dot(warp(x, w), y), dot(x, warp_t(y, w)), norm(x), norm(y)));
    }
    {
      const int r = std::array{1, 2, 4}[static_cast<std::size_t>(t % 3)];
      const Image x = random_image(n, n, 3), y = random_image(n / r, n / r, 3);
      err_down = std::max(err_down, rel(dot(downsample(x, r), y), dot(x, downsample_adjoint(y, r)),
                                        norm(x), norm(y)));
    }
    {
      const Image x = random_image(n, n, 3);
      const RawFrame y(random_image(n / 2, n / 2, 4));
      err_mosaick = std::max(err_mosaick, rel(dot(mosaick(x).planes(), y.planes()),
                                              dot(x, mosaick_adjoint(y)), norm(x), norm(y.planes())));
    }
    {
      const DegradationConfig deg{t % 2 == 0 ? 2 : 4};
      const int b = 1 + t % 4;
      std::vector<AffineWarp> warps;
      std::vector<RawFrame> frames;
      for (int i = 0; i < b; ++i) {
        warps.push_back(random_warp());
        frames.emplace_back(random_image(n / (2 * deg.scale), n / (2 * deg.scale), 4));
      }
      const Image x = random_image(n, n, 3);
      const Burst y(std::move(frames));
      const Burst ax = apply_forward(x, warps, deg);
      double lhs = 0.0, ny2 = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        lhs += dot(ax.frame(i).planes(), y.frame(i).planes());
        ny2 += squared_norm(y.frame(i).planes());
      }
      Image aty(x.shape());
      for (std::size_t i = 0; i < y.size(); ++i) {
        aty += warp_t(downsample_adjoint(mosaick_adjoint(y.frame(i)), deg.scale), warps[i]);
      }
      err_composite = std::max(err_composite, rel(lhs, dot(x, aty), norm(x), std::sqrt(ny2)));
    }
  }

  struct Row {
    std::string name;
    double value;
    double limit;
  };
  std::vector<Row> rows{{"adjoint warp", err_warp, 1e-5},
                        {"adjoint downsample", err_down, 1e-5},
                        {"adjoint mosaick", err_mosaick, 1e-6},
                        {"adjoint composite", err_composite, 1e-5}};

  const DegradationConfig deg4{4};
  for (const int b : {1, 4, 14}) {
    SynthConfig sc;
    sc.burst_size = b;
    sc.seed = opts.seed + static_cast<std::uint64_t>(b);
    const auto warps = sample_warps(sc, n, n);
    const double est = operator_norm_estimate(warps, deg4, n, n, 50);
    rows.push_back({"spectral ||A^T A|| / B (B=" + std::to_string(b) + ")", est / b, 1.0 + 1e-3});
  }

  {
    SynthConfig sc;
    sc.burst_size = 4;
    sc.scale = 2;
    sc.seed = opts.seed;
    sc.shot_range = {1e-3, 1e-3};
    sc.read_range = {1e-6, 1e-6};
    const SynthesizedScene scene = synthesize(procedural_srgb_scene(n, n, opts.seed, 8.0), sc);
    SolverConfig cfg;
    cfg.sigma = 0.02;
    cfg.lambda = 25.0;
    cfg.monotone_guard = true;
    const TotalVariationPrior tv;
    const SolveReport rep = reconstruct(scene.burst, scene.warps, tv, cfg, DegradationConfig{sc.scale});
    double worst = -std::numeric_limits<double>::infinity();
    double prev = *rep.initial_objective;
    for (const auto& it : rep.iterations) {
      worst = std::max(worst, *it.objective - prev);
      prev = *it.objective;
    }
    rows.push_back({"MM descent max J increase", worst, 1e-8});
  }

  bool all_ok = true;
  log << std::left << std::setw(40) << "property" << std::setw(16) << "value" << std::setw(12)
      << "limit" << "status\n";
  for (const auto& r : rows) {
    const bool ok = r.value <= r.limit;
    all_ok = all_ok && ok;
    std::ostringstream v, l;
    v << std::scientific << std::setprecision(3) << r.value;
    l << std::scientific << std::setprecision(3) << r.limit;
    log << std::setw(40) << r.name << std::setw(16) << v.str() << std::setw(12) << l.str()
        << (ok ? "PASS" : "FAIL") << '\n';
  }
  if (!all_ok) {
    log << "failing properties:";
    for (const auto& r : rows) {
      if (!(r.value <= r.limit)) log << " [" << r.name << ']';
    }
    log << '\n';
  }
  return all_ok ? 0 : 1;
}

}  // namespace burstsr
