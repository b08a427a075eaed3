#include "twinsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "twinsim/errors.hpp"
#include "twinsim/io.hpp"

namespace twinsim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& msg) {
  throw config_error(origin + ": " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& origin, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      fail(origin, path + "/" + key, "unknown field");
    }
  }
}

template <class T>
T get_or(const json& obj, const std::string& origin, const std::string& path, const char* key,
         T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(origin, path + "/" + key, "wrong type");
  }
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

PairKernel build_kernel(const KernelConfig& cfg) {
  if (cfg.shape == "delta") return PairKernel::delta();
  if (cfg.shape == "uniform") return PairKernel::uniform(cfg.radius);
  if (cfg.shape == "gaussian") return PairKernel::gaussian(cfg.radius, cfg.sigma_px);
  throw config_error("kernel: unknown shape '" + cfg.shape + "'");
}

SourceModel SourceConfig::build() const {
  SourceModel m;
  m.kind = kind;
  m.n0 = n0;
  m.modes = modes;
  m.spread = build_kernel(kernel);
  m.validate();
  return m;
}

ObjectMask build_mask(const ObjectConfig& cfg, std::uint32_t width, std::uint32_t height) {
  if (cfg.kind == "none") return ObjectMask::none(width, height);
  if (cfg.kind == "uniform") return ObjectMask::uniform(width, height, cfg.alpha);
  if (cfg.kind == "pi") return ObjectMask::pi_glyph(width, height, cfg.alpha);
  if (cfg.kind == "pgm") {
    ObjectMask m = io::load_mask_pgm(cfg.path);
    if (m.width() != width || m.height() != height) {
      throw config_error("object: mask '" + cfg.path + "' does not match the geometry");
    }
    return m;
  }
  throw config_error("object: unknown kind '" + cfg.kind + "'");
}

void ExperimentConfig::validate() const {
  geometry.validate();
  source.build();  // validates source parameters and the kernel
  detector.validate();
  if (object.kind != "none" && object.kind != "uniform" && object.kind != "pi" &&
      object.kind != "pgm") {
    throw config_error("/object/kind: unknown kind '" + object.kind + "'");
  }
  if (object.kind == "pgm" && object.path.empty()) {
    throw config_error("/object/path: required for pgm masks");
  }
  if ((object.kind == "uniform" || object.kind == "pi") &&
      !(object.alpha >= 0.0 && object.alpha <= 1.0)) {
    throw config_error("/object/alpha: must be in [0, 1]");
  }
  if (analysis.n_bins < 1) throw config_error("/analysis/n_bins: must be >= 1");
  if (geometry.width % std::uint32_t(detector.bin_factor) != 0 ||
      geometry.height % std::uint32_t(detector.bin_factor) != 0) {
    throw config_error("/detector/bin_factor: must divide width and height");
  }
  if (!sweep.sigmas.empty() && !sweep.etas.empty()) {
    throw config_error("/sweep: set either sigmas or etas, not both");
  }
  for (double s : sweep.sigmas) {
    if (!(s >= 0.0 && s <= 1.0)) throw config_error("/sweep/sigmas: values must be in [0, 1]");
  }
  for (double e : sweep.etas) {
    if (!(e >= 0.0 && e <= 1.0)) throw config_error("/sweep/etas: values must be in [0, 1]");
  }
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> w = detector.warnings();
  if (source.kind == SourceKind::twin && analysis.shift) {
    const int bin = detector.bin_factor;
    const int r_binned = (source.kernel.radius + bin - 1) / bin;
    const long norm2 = analysis.shift->norm2();
    if (norm2 <= long(r_binned) * r_binned) {
      w.push_back("analysis: decorrelation shift lies within the pair-correlation length; "
                  "the differential-classical reference is not decorrelated");
    }
  }
  return w;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw config_error(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                       ": " + e.what());
  }
  if (!root.is_object()) throw config_error(origin + ": top level must be an object");

  // A manifest embeds the config it was produced from; accept it directly.
  if (root.contains("format") && root["format"] == "twinsim-manifest") {
    if (!root.contains("config")) throw config_error(origin + ": manifest without config");
    root = root["config"];
  }

  check_keys(root, origin, "",
             {"version", "geometry", "source", "detector", "object", "analysis", "sweep",
              "seed"});
  const int version = get_or<int>(root, origin, "", "version", 1);
  if (version != 1) fail(origin, "/version", "unsupported config version");

  ExperimentConfig cfg;
  if (root.contains("geometry")) {
    const auto& g = root["geometry"];
    check_keys(g, origin, "/geometry", {"width", "height", "n_frames"});
    cfg.geometry.width = get_or<std::uint32_t>(g, origin, "/geometry", "width", 64);
    cfg.geometry.height = get_or<std::uint32_t>(g, origin, "/geometry", "height", 64);
    cfg.geometry.n_frames = get_or<std::uint32_t>(g, origin, "/geometry", "n_frames", 100);
  }
  if (root.contains("source")) {
    const auto& s = root["source"];
    check_keys(s, origin, "/source", {"kind", "n0", "modes", "kernel"});
    cfg.source.kind =
        source_kind_from_name(get_or<std::string>(s, origin, "/source", "kind", "twin"));
    cfg.source.n0 = get_or<double>(s, origin, "/source", "n0", cfg.source.n0);
    cfg.source.modes = get_or<double>(s, origin, "/source", "modes", cfg.source.modes);
    if (s.contains("kernel")) {
      const auto& k = s["kernel"];
      check_keys(k, origin, "/source/kernel", {"shape", "radius", "sigma_px"});
      cfg.source.kernel.shape =
          get_or<std::string>(k, origin, "/source/kernel", "shape", "delta");
      cfg.source.kernel.radius = get_or<int>(k, origin, "/source/kernel", "radius", 0);
      cfg.source.kernel.sigma_px =
          get_or<double>(k, origin, "/source/kernel", "sigma_px", 0.5);
    }
  }
  if (root.contains("detector")) {
    const auto& d = root["detector"];
    check_keys(d, origin, "/detector",
               {"eta_signal", "eta_idler", "dark_mean", "read_noise_rms", "bin_factor"});
    cfg.detector.eta_signal = get_or<double>(d, origin, "/detector", "eta_signal", 1.0);
    cfg.detector.eta_idler = get_or<double>(d, origin, "/detector", "eta_idler", 1.0);
    cfg.detector.dark_mean = get_or<double>(d, origin, "/detector", "dark_mean", 0.0);
    cfg.detector.read_noise_rms =
        get_or<double>(d, origin, "/detector", "read_noise_rms", 0.0);
    cfg.detector.bin_factor = get_or<int>(d, origin, "/detector", "bin_factor", 1);
  }
  if (root.contains("object")) {
    const auto& o = root["object"];
    check_keys(o, origin, "/object", {"kind", "alpha", "path"});
    cfg.object.kind = get_or<std::string>(o, origin, "/object", "kind", "none");
    cfg.object.alpha = get_or<double>(o, origin, "/object", "alpha", 0.0);
    cfg.object.path = get_or<std::string>(o, origin, "/object", "path", "");
  }
  if (root.contains("analysis")) {
    const auto& a = root["analysis"];
    check_keys(a, origin, "/analysis",
               {"flat_field", "shift", "n_bins", "min_members", "margin", "calib_frames"});
    cfg.analysis.flat_field = get_or<bool>(a, origin, "/analysis", "flat_field", true);
    if (a.contains("shift") && !a["shift"].is_null()) {
      const auto& sh = a["shift"];
      check_keys(sh, origin, "/analysis/shift", {"dx", "dy"});
      cfg.analysis.shift = ShiftVector{get_or<int>(sh, origin, "/analysis/shift", "dx", 0),
                                       get_or<int>(sh, origin, "/analysis/shift", "dy", 0)};
    }
    cfg.analysis.n_bins = get_or<int>(a, origin, "/analysis", "n_bins", 1);
    cfg.analysis.min_members =
        get_or<std::uint32_t>(a, origin, "/analysis", "min_members", 20);
    cfg.analysis.margin = get_or<int>(a, origin, "/analysis", "margin", -1);
    cfg.analysis.calib_frames =
        get_or<std::uint32_t>(a, origin, "/analysis", "calib_frames", 200);
  }
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    check_keys(s, origin, "/sweep", {"sigmas", "etas", "frames_per_point"});
    cfg.sweep.sigmas = get_or<std::vector<double>>(s, origin, "/sweep", "sigmas", {});
    cfg.sweep.etas = get_or<std::vector<double>>(s, origin, "/sweep", "etas", {});
    cfg.sweep.frames_per_point =
        get_or<std::uint32_t>(s, origin, "/sweep", "frames_per_point", 0);
  }
  cfg.seed = get_or<std::uint64_t>(root, origin, "", "seed", 1);

  try {
    cfg.validate();
  } catch (const config_error& e) {
    throw config_error(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["version"] = 1;
  j["geometry"] = {{"width", cfg.geometry.width},
                   {"height", cfg.geometry.height},
                   {"n_frames", cfg.geometry.n_frames}};
  j["source"] = {{"kind", source_kind_name(cfg.source.kind)},
                 {"n0", cfg.source.n0},
                 {"modes", cfg.source.modes},
                 {"kernel",
                  {{"shape", cfg.source.kernel.shape},
                   {"radius", cfg.source.kernel.radius},
                   {"sigma_px", cfg.source.kernel.sigma_px}}}};
  j["detector"] = {{"eta_signal", cfg.detector.eta_signal},
                   {"eta_idler", cfg.detector.eta_idler},
                   {"dark_mean", cfg.detector.dark_mean},
                   {"read_noise_rms", cfg.detector.read_noise_rms},
                   {"bin_factor", cfg.detector.bin_factor}};
  j["object"] = {{"kind", cfg.object.kind}, {"alpha", cfg.object.alpha},
                 {"path", cfg.object.path}};
  ordered_json a{{"flat_field", cfg.analysis.flat_field}};
  if (cfg.analysis.shift) {
    a["shift"] = {{"dx", cfg.analysis.shift->dx}, {"dy", cfg.analysis.shift->dy}};
  } else {
    a["shift"] = nullptr;
  }
  a["n_bins"] = cfg.analysis.n_bins;
  a["min_members"] = cfg.analysis.min_members;
  a["margin"] = cfg.analysis.margin;
  a["calib_frames"] = cfg.analysis.calib_frames;
  j["analysis"] = a;
  j["sweep"] = {{"sigmas", cfg.sweep.sigmas},
                {"etas", cfg.sweep.etas},
                {"frames_per_point", cfg.sweep.frames_per_point}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    const std::vector<std::string>& outputs) {
  ordered_json m;
  m["format"] = "twinsim-manifest";
  m["version"] = 1;
  m["config"] = ordered_json::parse(config_to_json(config));
  m["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path.string());
  out << m.dump(2) << '\n';
}

}  // namespace twinsim
