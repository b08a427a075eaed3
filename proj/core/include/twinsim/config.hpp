#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twinsim/detector.hpp"
#include "twinsim/geometry.hpp"
#include "twinsim/source.hpp"

namespace twinsim {

struct KernelConfig {
  std::string shape = "delta";  // delta | uniform | gaussian
  int radius = 0;
  double sigma_px = 0.5;
};

PairKernel build_kernel(const KernelConfig& cfg);

struct SourceConfig {
  SourceKind kind = SourceKind::twin;
  double n0 = 1000.0;
  double modes = 1e4;
  KernelConfig kernel;

  SourceModel build() const;
};

struct ObjectConfig {
  std::string kind = "none";  // none | uniform | pi | pgm
  double alpha = 0.0;
  std::string path;           // pgm only
};

ObjectMask build_mask(const ObjectConfig& cfg, std::uint32_t width, std::uint32_t height);

struct AnalysisConfig {
  bool flat_field = true;
  std::optional<ShiftVector> shift;  // default max(1, 4 * kernel radius) along x
  int n_bins = 1;
  std::uint32_t min_members = 20;
  int margin = -1;                   // -1: ceil(kernel radius / bin factor)
  std::uint32_t calib_frames = 200;
};

struct SweepConfig {
  std::vector<double> sigmas;  // targets; eta = 1 - sigma
  std::vector<double> etas;    // alternative axis; at most one may be set
  std::uint32_t frames_per_point = 0;  // 0: geometry.n_frames
};

/// Complete description of one simulated experiment. Serializes to the
/// versioned JSON config format (see load_config / config_to_json).
struct ExperimentConfig {
  Geometry geometry{64, 64, 100};
  SourceConfig source;
  DetectorModel detector;
  ObjectConfig object;
  AnalysisConfig analysis;
  SweepConfig sweep;
  std::uint64_t seed = 1;

  void validate() const;  // throws config_error with a JSON-pointer-style path

  /// Non-fatal conditions worth surfacing: unbalanced efficiencies, a
  /// decorrelation shift within the correlation length.
  std::vector<std::string> warnings() const;
};

/// Parses a config file, or a run manifest embedding one (the "config"
/// field of a manifest round-trips). Throws config_error with line-precise
/// positions for syntax errors and field paths for semantic ones.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin = "config");

/// Canonical JSON form (stable key order), embeddable in manifests.
std::string config_to_json(const ExperimentConfig& config);

/// Writes a run manifest: format tag, version, the full config and the list
/// of files the run produced.
void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    const std::vector<std::string>& outputs);

}  // namespace twinsim
