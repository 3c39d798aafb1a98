// Batch front end: synthesize datasets, align bursts, reconstruct, evaluate
// and self-test the operators.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

#include "burstsr/commands.hpp"
#include "burstsr/error.hpp"

namespace {

burstsr::Range parse_range(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw CLI::ValidationError("range", "expected lo,hi but got '" + text + "'");
  }
  return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raw burst super-resolution toolkit"};
  app.require_subcommand(1);

  burstsr::SynthesizeOptions synth;
  std::string shot_range = "1e-4,1e-2", read_range = "1e-6,1e-4";
  auto* synth_cmd = app.add_subcommand("synthesize", "Generate synthetic raw bursts from sRGB PNGs");
  synth_cmd->add_option("--input", synth.input, "Directory of sRGB PNG images")->required();
  synth_cmd->add_option("--out", synth.out, "Dataset output directory")->required();
  synth_cmd->add_option("--burst", synth.burst, "Frames per burst")->capture_default_str();
  synth_cmd->add_option("--scale", synth.scale, "Downsampling factor")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--max-trans", synth.max_translation, "Max translation (HR px)")->capture_default_str();
  synth_cmd->add_option("--max-rot", synth.max_rotation, "Max rotation (degrees)")->capture_default_str();
  synth_cmd->add_option("--noise-shot", shot_range, "Shot variance range lo,hi")->capture_default_str();
  synth_cmd->add_option("--noise-read", read_range, "Read variance range lo,hi")->capture_default_str();
  synth_cmd->add_flag("--random-gains", synth.randomize_gains, "Randomize red/blue white-balance gains");
  synth_cmd->add_option("--jobs", synth.jobs, "Scenes processed in parallel")->capture_default_str();

  burstsr::AlignOptions align;
  std::string model = "euclidean";
  auto* align_cmd = app.add_subcommand("align", "Estimate per-frame warps with ECC");
  align_cmd->add_option("--scene", align.scene, "Scene directory")->required();
  align_cmd->add_option("--model", model, "translation | euclidean")->capture_default_str();
  align_cmd->add_option("--max-iters", align.config.max_iters)->capture_default_str();
  align_cmd->add_option("--eps", align.config.eps)->capture_default_str();
  align_cmd->add_option("--pyramid-levels", align.config.pyramid_levels)->capture_default_str();
  align_cmd->add_option("--prefilter", align.config.prefilter_sigma,
                        "Gaussian sigma applied to both lumas, 0 disables")
      ->capture_default_str();
  align_cmd->add_option("--min-rho", align.config.min_rho,
                        "Correlation below which a frame falls back to identity")
      ->capture_default_str();

  burstsr::ReconstructOptions recon;
  std::string png;
  bool gt_warps = false, est_warps = false;
  auto* recon_cmd = app.add_subcommand("reconstruct", "Run the iterative reconstruction");
  recon_cmd->add_option("--scene", recon.scene, "Scene directory")->required();
  recon_cmd->add_option("--config", recon.config, "Solver config JSON")->required();
  recon_cmd->add_option("--out", recon.out, "Output tensor (.btf)")->required();
  recon_cmd->add_option("--png", png, "Optional sRGB preview");
  auto* gt_flag = recon_cmd->add_flag("--use-gt-warps", gt_warps, "Use the manifest's true warps");
  auto* est_flag = recon_cmd->add_flag("--use-estimated-warps", est_warps, "Use warps.json (default)");
  gt_flag->excludes(est_flag);

  burstsr::EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR/SSIM against the ground truth");
  eval_cmd->add_option("--scene", eval.scene, "Scene directory or dataset root")->required();
  eval_cmd->add_option("--sr", eval.sr, "Reconstruction tensor")->required();

  burstsr::SelftestOptions self;
  auto* self_cmd = app.add_subcommand("selftest", "Adjoint, spectral-bound and descent checks");
  self_cmd->add_option("--size", self.size)->capture_default_str();
  self_cmd->add_option("--trials", self.trials)->capture_default_str();
  self_cmd->add_option("--seed", self.seed)->capture_default_str();
  self_cmd->add_option("--inject-fault", self.fault, "Test hook: break an operator")->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      synth.noise_shot = parse_range(shot_range);
      synth.noise_read = parse_range(read_range);
      return burstsr::cmd_synthesize(synth, std::cout);
    }
    if (*align_cmd) {
      align.config.model = burstsr::parse_motion_model(model);
      return burstsr::cmd_align(align, std::cout);
    }
    if (*recon_cmd) {
      recon.use_gt_warps = gt_warps;
      if (!png.empty()) recon.png = png;
      return burstsr::cmd_reconstruct(recon, std::cout);
    }
    if (*eval_cmd) return burstsr::cmd_evaluate(eval, std::cout);
    if (*self_cmd) return burstsr::cmd_selftest(self, std::cout);
  } catch (const burstsr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
