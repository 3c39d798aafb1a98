#pragma once

// On-disk layout shared by the command-line tools. A scene directory holds
//
//   gt.btf, frame_00.btf ... frame_{B-1}.btf   tensors (imaging-core format)
//   meta.json                                   SceneManifest
//   warps.json                                  estimated warps (align)
//   metrics.json                                PSNR/SSIM (evaluate)
//
// Every JSON document carries "version": 1.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "burstsr/alignment.hpp"
#include "burstsr/priors.hpp"
#include "burstsr/solver.hpp"
#include "burstsr/synthesis.hpp"

namespace burstsr {

inline constexpr int kSchemaVersion = 1;

struct SceneManifest {
  std::uint64_t seed = 0;
  int burst_size = 0;
  int scale = 4;
  Index hr_height = 0;
  Index hr_width = 0;
  std::vector<AffineWarp> warps;
  NoiseParams noise;
  CameraParams camera;
  std::string gt_file = "gt.btf";
  std::vector<std::string> frame_files;
};

nlohmann::json to_json(const SceneManifest& m);
SceneManifest manifest_from_json(const nlohmann::json& j);

std::string frame_file_name(std::size_t index);

/// Writes the tensors and meta.json of a synthesized scene into `dir`.
void write_scene(const std::filesystem::path& dir, const SynthesizedScene& scene,
                 std::uint64_t seed, int scale);

struct LoadedScene {
  SceneManifest manifest;
  Burst burst;
  std::optional<Image> gt;
};

/// Reads meta.json and the frames; checks the manifest invariants.
LoadedScene load_scene(const std::filesystem::path& dir, bool with_gt);

bool is_scene_dir(const std::filesystem::path& dir);

nlohmann::json to_json(const AlignmentResult& r);
AlignmentResult alignment_from_json(const nlohmann::json& j);

struct SolverSetup {
  SolverConfig config;
  std::unique_ptr<Regularizer> prior;
};

/// {"K":10, "alpha":null, "sigma":null, "lambda":0.002,
///  "prior":{"name":"tv","inner_iters":50}, "extrapolation":"none",
///  "monotone_guard":true}
SolverSetup solver_setup_from_json(const nlohmann::json& j);
SolverSetup load_solver_setup(const std::filesystem::path& path);

/// One row per iteration: k, data_fidelity, objective, residual_norm,
/// step_norm, weight, guard.
void write_report_csv(const std::filesystem::path& path, const SolveReport& report);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// JSON has no infinity; +inf is stored as the string "inf".
nlohmann::json metric_value(double v);

}  // namespace burstsr
