#include "burstsr/scene.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "burstsr/io.hpp"

namespace burstsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json warp_to_json(const AffineWarp& w) {
  const auto k = w.coefficients();
  return json(std::vector<double>(k.begin(), k.end()));
}

AffineWarp warp_from_json(const json& j) {
  const auto k = j.get<std::vector<double>>();
  if (k.size() != 6) throw FormatError("warp needs 6 coefficients");
  return AffineWarp::from_coefficients({k[0], k[1], k[2], k[3], k[4], k[5]});
}

void check_version(const json& j, const std::string& what) {
  if (!j.contains("version") || j.at("version").get<int>() != kSchemaVersion) {
    throw FormatError(what + ": unsupported or missing schema version");
  }
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json to_json(const SceneManifest& m) {
  json warps = json::array();
  for (const auto& w : m.warps) warps.push_back(warp_to_json(w));
  json ccm = json::array();
  for (int r = 0; r < 3; ++r) ccm.push_back({m.camera.ccm(r, 0), m.camera.ccm(r, 1), m.camera.ccm(r, 2)});
  return json{
      {"version", kSchemaVersion},
      {"seed", m.seed},
      {"burst_size", m.burst_size},
      {"scale", m.scale},
      {"hr_size", {m.hr_height, m.hr_width}},
      {"warps", warps},
      {"noise", {{"shot", m.noise.shot}, {"read", m.noise.read}}},
      {"camera",
       {{"rgb_gains", {m.camera.rgb_gains[0], m.camera.rgb_gains[1], m.camera.rgb_gains[2]}},
        {"ccm", ccm}}},
      {"gt", m.gt_file},
      {"frames", m.frame_files},
  };
}

SceneManifest manifest_from_json(const json& j) {
  try {
    check_version(j, "meta.json");
    SceneManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.burst_size = j.at("burst_size").get<int>();
    m.scale = j.at("scale").get<int>();
    const auto hr = j.at("hr_size").get<std::vector<Index>>();
    if (hr.size() != 2) throw FormatError("hr_size needs two entries");
    m.hr_height = hr[0];
    m.hr_width = hr[1];
    for (const auto& w : j.at("warps")) m.warps.push_back(warp_from_json(w));
    m.noise.shot = j.at("noise").at("shot").get<double>();
    m.noise.read = j.at("noise").at("read").get<double>();
    const auto gains = j.at("camera").at("rgb_gains").get<std::vector<double>>();
    const auto ccm = j.at("camera").at("ccm").get<std::vector<std::vector<double>>>();
    if (gains.size() != 3 || ccm.size() != 3) throw FormatError("camera block malformed");
    for (int r = 0; r < 3; ++r) {
      m.camera.rgb_gains[r] = gains[static_cast<std::size_t>(r)];
      if (ccm[static_cast<std::size_t>(r)].size() != 3) throw FormatError("ccm must be 3x3");
      for (int c = 0; c < 3; ++c) m.camera.ccm(r, c) = ccm[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    m.gt_file = j.at("gt").get<std::string>();
    m.frame_files = j.at("frames").get<std::vector<std::string>>();
    if (static_cast<int>(m.warps.size()) != m.burst_size ||
        static_cast<int>(m.frame_files.size()) != m.burst_size) {
      throw FormatError("warp and frame lists must have burst_size entries");
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
}

std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%02zu.btf", index);
  return buf;
}

void write_scene(const fs::path& dir, const SynthesizedScene& scene, std::uint64_t seed,
                 int scale) {
  fs::create_directories(dir);
  SceneManifest m;
  m.seed = seed;
  m.burst_size = static_cast<int>(scene.burst.size());
  m.scale = scale;
  m.hr_height = scene.gt.height();
  m.hr_width = scene.gt.width();
  m.warps = scene.warps;
  m.noise = scene.noise;
  m.camera = scene.camera;
  write_tensor(scene.gt, dir / m.gt_file);
  for (std::size_t i = 0; i < scene.burst.size(); ++i) {
    m.frame_files.push_back(frame_file_name(i));
    write_tensor(scene.burst.frame(i).planes(), dir / m.frame_files.back());
  }
  write_json(dir / "meta.json", to_json(m));
}

bool is_scene_dir(const fs::path& dir) { return fs::is_regular_file(dir / "meta.json"); }

LoadedScene load_scene(const fs::path& dir, bool with_gt) {
  if (!is_scene_dir(dir)) throw IoError(dir.string() + " has no meta.json");
  LoadedScene s;
  s.manifest = manifest_from_json(read_json(dir / "meta.json"));
  std::vector<RawFrame> frames;
  for (const auto& name : s.manifest.frame_files) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw IoError("missing frame " + p.string());
    frames.emplace_back(read_tensor<double>(p));
  }
  s.burst = Burst(std::move(frames));
  const Index f = 2 * static_cast<Index>(s.manifest.scale);
  if (s.burst.frame_height() * f != s.manifest.hr_height ||
      s.burst.frame_width() * f != s.manifest.hr_width) {
    throw FormatError(dir.string() + ": frame size inconsistent with hr_size and scale");
  }
  if (with_gt) {
    const fs::path p = dir / s.manifest.gt_file;
    if (!fs::exists(p)) throw IoError("missing ground truth " + p.string());
    s.gt = read_tensor<double>(p);
  }
  return s;
}

json to_json(const AlignmentResult& r) {
  json frames = json::array();
  for (std::size_t i = 0; i < r.warps.size(); ++i) {
    frames.push_back({{"matrix", warp_to_json(r.warps[i])},
                      {"rho", r.final_rho[i]},
                      {"converged", static_cast<bool>(r.converged[i])}});
  }
  return json{{"version", kSchemaVersion}, {"warps", frames}};
}

AlignmentResult alignment_from_json(const json& j) {
  try {
    check_version(j, "warps.json");
    AlignmentResult r;
    for (const auto& f : j.at("warps")) {
      r.warps.push_back(warp_from_json(f.at("matrix")));
      r.final_rho.push_back(f.at("rho").get<double>());
      r.converged.push_back(f.at("converged").get<bool>());
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("warps.json: ") + e.what());
  }
}

SolverSetup solver_setup_from_json(const json& j) {
  try {
    SolverSetup s;
    SolverConfig& c = s.config;
    c.iterations = j.value("K", 10);
    if (j.contains("alpha") && j.at("alpha").is_string()) {
      if (j.at("alpha").get<std::string>() != "measured") {
        throw ParameterError("alpha must be a number or \"measured\"");
      }
      c.measured_alpha = true;
      c.alpha_margin = j.value("alpha_margin", 1.01);
    } else {
      c.alpha = optional_number(j, "alpha");
    }
    c.sigma = optional_number(j, "sigma");
    c.lambda = j.value("lambda", 0.002);
    c.prox_strength = optional_number(j, "prox_strength");
    if (j.contains("extrapolation")) {
      const json& e = j.at("extrapolation");
      if (e.is_array()) {
        c.extrapolation = Extrapolation::list;
        c.weights = e.get<std::vector<double>>();
      } else {
        c.extrapolation = parse_extrapolation(e.get<std::string>());
        if (c.extrapolation == Extrapolation::list) {
          c.weights = j.at("weights").get<std::vector<double>>();
        }
      }
    }
    if (j.contains("monotone_guard") && !j.at("monotone_guard").is_null()) {
      c.monotone_guard = j.at("monotone_guard").get<bool>();
    }

    std::string prior_name = "tv";
    int inner_iters = 50;
    double tol = 1e-5;
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      if (p.is_string()) {
        prior_name = p.get<std::string>();
      } else {
        prior_name = p.value("name", prior_name);
        inner_iters = p.value("inner_iters", inner_iters);
        tol = p.value("tol", tol);
      }
    }
    s.prior = make_prior(prior_name, inner_iters, tol);
    c.validate();
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("solver config: ") + e.what());
  }
}

SolverSetup load_solver_setup(const fs::path& path) {
  return solver_setup_from_json(read_json(path));
}

void write_report_csv(const fs::path& path, const SolveReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "k,data_fidelity,objective,residual_norm,step_norm,weight,guard\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < report.iterations.size(); ++k) {
    const auto& r = report.iterations[k];
    os << (k + 1) << ',' << r.data_fidelity << ',';
    if (r.objective) os << *r.objective;
    os << ',' << r.residual_norm << ',' << r.step_norm << ',' << r.weight << ','
       << (r.guard_triggered ? 1 : 0) << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

json metric_value(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

}  // namespace burstsr
