#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twinsim/config.hpp"
#include "twinsim/estimators.hpp"
#include "twinsim/frame.hpp"

namespace twinsim {

/// Detected stacks of one simulated run (post detection chain). Single-arm
/// sources leave `idler` empty.
struct SimulatedStacks {
  FrameStack signal;
  std::optional<FrameStack> idler;

  bool is_pair() const { return idler.has_value(); }
  FramePair pair() const { return FramePair{signal, *idler}; }
};

/// Runs source generation plus the detection chain for any source kind.
/// Twin sources pair under the mirror map; split-coherent sources are
/// mirrored so the two halves pair the same way.
SimulatedStacks simulate_detected(const ExperimentConfig& config, std::uint64_t master_seed,
                                  unsigned threads = 0);

/// Object-free reference measurements: the idler mean used as the constant
/// reference, measured excess noise, flat-field gains and the preliminary
/// per-frame sigma distribution.
struct CalibrationData {
  double n_i_ref = 0.0;
  double excess_idler = 0.0;
  SigmaSummary sigma;
  std::vector<SigmaEstimate> frame_sigmas;
  FlatFieldGains gains_signal;
  FlatFieldGains gains_idler;
};

/// Simulates an object-free twin run with config.analysis.calib_frames
/// frames and measures the calibration quantities.
CalibrationData run_calibration(const ExperimentConfig& config, unsigned threads = 0);

struct AnalyzeOptions {
  bool flat_field = true;
  ShiftVector shift{1, 0};
  int n_bins = 1;
  std::size_t min_members = 20;
  std::uint32_t margin = 0;
  unsigned threads = 0;
  /// Absorption used for the theory columns; NaN means "use the measured
  /// spatial mean of the quantum alpha map".
  double alpha_for_theory = std::numeric_limits<double>::quiet_NaN();

  static AnalyzeOptions from_config(const ExperimentConfig& config);
};

/// Everything the analysis stage measures on one detected pair.
struct AnalysisReport {
  std::vector<SigmaEstimate> frame_sigmas;
  SigmaSummary sigma;
  double excess_idler = 0.0;
  double n_i_ref = 0.0;
  double alpha_hat = 0.0;  // spatial mean of the mean quantum alpha map
  double alpha_for_theory = 0.0;
  Region region;
  std::array<SnrReport, 3> snr;       // indexed by Scheme
  std::array<AlphaMap, 3> mean_maps;  // indexed by Scheme
  RatioEstimate r_cl;                 // quantum vs direct classical, all frames
  RatioEstimate r_dcl;                // quantum vs differential classical
  double r_cl_theory = 0.0;
  double r_dcl_theory = 0.0;
  std::vector<FrameClass> classes;    // per-class ratios filled in
  std::vector<double> class_r_cl_theory;
  std::vector<double> class_r_dcl_theory;
};

/// Measures sigma, excess noise, the three absorption estimators, their
/// temporal SNR maps and the R ratios (global and per sigma class).
/// Calibration data, when given, provides the reference mean and the
/// flat-field gains; otherwise both come from the analyzed stacks
/// themselves (self flat-fielding is then used for sigma only, since
/// gains derived from object frames would absorb the object).
AnalysisReport analyze_pair(const FramePair& detected, const AnalyzeOptions& options,
                            const CalibrationData* calib = nullptr);

// --- File-producing runners shared by the CLI and the acceptance suite ----

struct SimulateOutputs {
  std::vector<std::string> files;  // relative to out_dir
};

SimulateOutputs run_simulate(const ExperimentConfig& config,
                             const std::filesystem::path& out_dir, unsigned threads = 0);

struct AnalyzeOutputs {
  AnalysisReport report;
  std::vector<std::string> files;
};

AnalyzeOutputs run_analyze(const FramePair& detected, const ExperimentConfig& config,
                           const std::filesystem::path& out_dir,
                           const CalibrationData* calib = nullptr, unsigned threads = 0);

AnalyzeOutputs run_analyze_files(const std::filesystem::path& signal_path,
                                 const std::filesystem::path& idler_path,
                                 const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir, unsigned threads = 0);

struct SweepPoint {
  double sigma_target = 0.0;
  double eta = 0.0;
  double sigma_measured = 0.0;
  double sigma_se = 0.0;
  double excess = 0.0;
  double alpha_hat = 0.0;
  RatioEstimate r_cl, r_dcl;
  double r_cl_theory = 0.0;
  double r_dcl_theory = 0.0;
  std::size_t n_frames = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double r_cl_crossing = 0.0;   // sigma where measured R_cl crosses 1
  double r_dcl_crossing = 0.0;  // sigma where measured R_dcl crosses 1
  std::vector<std::string> files;
};

/// One full R-vs-sigma sweep: per point an object-free calibration run and
/// an object run at eta = 1 - sigma_target, with theory overlays.
SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      unsigned threads = 0);

struct DemoResult {
  double rms_q = 0.0;    // residual rms of the mean map against the mask
  double rms_dcl = 0.0;
  double rms_cl = 0.0;
  double glyph_contrast_q = 0.0;     // glyph-background contrast in the q map
  double glyph_contrast_q_se = 0.0;  // its standard error
  std::vector<std::string> files;
};

/// The pi-glyph imaging demo: equal photon budget for the three schemes,
/// identical gray scaling across the three emitted images.
DemoResult run_demo_pi(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       unsigned threads = 0);

/// Renders one frame of a stack file (or the temporal mean when `frame` is
/// empty) to a 16-bit PGM with an auto-ranged scale and a JSON sidecar.
void run_render(const std::filesystem::path& stack_path, std::optional<std::size_t> frame,
                const std::filesystem::path& out_pgm);

}  // namespace twinsim
