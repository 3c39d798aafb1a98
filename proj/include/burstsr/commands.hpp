#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "burstsr/alignment.hpp"
#include "burstsr/synthesis.hpp"

namespace burstsr {

struct SynthesizeOptions {
  std::filesystem::path input;
  std::filesystem::path out;
  int burst = 14;
  int scale = 4;
  std::uint64_t seed = 0;
  double max_translation = 4.0;
  double max_rotation = 1.0;
  Range noise_shot{1e-4, 1e-2};
  Range noise_read{1e-6, 1e-4};
  bool randomize_gains = false;
  int jobs = 1;
};

struct AlignOptions {
  std::filesystem::path scene;
  AlignmentConfig config;
};

struct ReconstructOptions {
  std::filesystem::path scene;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> png;
  bool use_gt_warps = false;
};

struct EvaluateOptions {
  std::filesystem::path scene;
  std::filesystem::path sr;
};

struct SelftestOptions {
  int size = 32;
  int trials = 100;
  std::uint64_t seed = 0;
  /// Test hook: "warp_adjoint" swaps the warp transpose for the inverse warp.
  std::string fault;
};

/// Each command returns a process exit code; log lines go to `log`.
int cmd_synthesize(const SynthesizeOptions& opts, std::ostream& log);
int cmd_align(const AlignOptions& opts, std::ostream& log);
int cmd_reconstruct(const ReconstructOptions& opts, std::ostream& log);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);
int cmd_selftest(const SelftestOptions& opts, std::ostream& log);

/// Sidecar CSV written next to the reconstruction output.
std::filesystem::path report_path_for(const std::filesystem::path& out);

}  // namespace burstsr
