#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "twinsim/frame.hpp"
#include "twinsim/geometry.hpp"

namespace twinsim {

/// Absorption estimation schemes:
///  - quantum: idler at the mirrored pixel as a correlated noise reference
///  - diff_classical: idler at a shifted, decorrelated pixel
///  - direct_classical: constant (noise-free) mean reference
enum class Scheme : std::uint8_t { quantum = 0, diff_classical = 1, direct_classical = 2 };

const char* scheme_tag(Scheme s);  // "q", "dcl", "cl"

/// Per-frame degree of correlation
///   sigma = Var[N_i(m(x)) - N_s(x)] / < N_i(m(x)) + N_s(x) >
/// with variance and means taken over the spatial ensemble of region pixels
/// (population variance). sigma < 1 certifies nonclassical correlation;
/// balanced twin beams reach sigma = 1 - eta.
struct SigmaEstimate {
  std::size_t frame_id = 0;
  double sigma = 0.0;
  std::size_t n_pixels = 0;
  double mean_signal = 0.0;
  double mean_idler = 0.0;
};

struct SigmaSummary {
  double mean = 0.0;
  double sd = 0.0;  // frame-to-frame spread
  double se = 0.0;  // standard error of the mean
  std::size_t n_frames = 0;
};

SigmaEstimate estimate_sigma(const RealFramePair& pair, const Region& region, std::size_t frame);
std::vector<SigmaEstimate> estimate_sigma_stack(const RealFramePair& pair, const Region& region,
                                                unsigned threads = 1);
SigmaSummary summarize_sigma(std::span<const SigmaEstimate> sigmas);

/// Single-beam excess noise E = (spatial variance - spatial mean) / mean,
/// the noise above the Poisson level. 0 for coherent light, n/M for
/// multithermal light of mean n and M modes.
double estimate_excess_noise(const RealFrameStack& stack, const Region& region,
                             std::size_t frame);
/// Frame-averaged excess noise.
double estimate_excess_noise(const RealFrameStack& stack, const Region& region);

/// Per-pixel gain g(x) = global mean / temporal mean(x); multiplying by g
/// removes static intensity gradients while preserving the global mean.
struct FlatFieldGains {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> gain;  // empty means unity

  bool is_unity() const { return gain.empty(); }
  static FlatFieldGains unity() { return {}; }
};

FlatFieldGains flat_field_gains(const RealFrameStack& stack);
RealFrameStack apply_gains(const RealFrameStack& stack, const FlatFieldGains& gains);
RealFrameStack flat_field(const RealFrameStack& stack);
RealFrameStack flat_field(const FrameStack& stack);

/// Result of the mirror-registration search.
struct CenterCalibration {
  ShiftVector shift;
  double sigma_at_min = 0.0;
  /// (median sigma over shifts - minimum) in units of the minimum's
  /// standard error; small depth means the sigma surface is flat and the
  /// returned shift is not trustworthy.
  double depth = 0.0;
  bool low_confidence = false;
};

/// Finds the integer idler shift minimizing the mean sigma over frames,
/// scanning [-search_radius, search_radius]^2. Ties break toward the
/// smallest |shift|, then lexicographically (dy, dx).
CenterCalibration calibrate_center(const RealFramePair& pair, int search_radius);

/// One absorption-estimate frame. Values may be negative due to noise;
/// pixels that cannot be formed (shifted reference out of bounds) are NaN.
struct AlphaMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  Scheme scheme = Scheme::quantum;
  std::vector<double> values;

  bool valid(std::size_t idx) const { return values[idx] == values[idx]; }
  static constexpr double invalid_value() { return std::numeric_limits<double>::quiet_NaN(); }
};

/// alpha_q(x) = [N_i(m(x)) - N_s(x)] / n_i_ref
AlphaMap alpha_quantum(const RealFramePair& pair, std::size_t frame, double n_i_ref);
/// alpha_dcl(x) = [N_i(m(x) + a) - N_s(x)] / n_i_ref; reduces to alpha_quantum at a = 0.
AlphaMap alpha_diff_classical(const RealFramePair& pair, std::size_t frame, ShiftVector shift,
                              double n_i_ref);
/// alpha_cl(x) = [n_i_ref - N_s(x)] / n_i_ref
AlphaMap alpha_direct_classical(const RealFrameStack& signal, std::size_t frame, double n_i_ref);

/// Temporal signal-to-noise of an absorption estimate,
/// SNR(x) = mean_t alpha(x) / sd_t alpha(x) with the unbiased (n-1) sd.
/// Pixels with zero temporal variance, or invalid in any frame, are NaN.
struct SnrReport {
  Scheme scheme = Scheme::quantum;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> snr;  // NaN where undefined
  double spatial_mean = 0.0;
  std::size_t n_frames = 0;
  std::size_t n_defined = 0;
};

/// Streaming accumulator so that per-frame maps need not be kept in memory.
class SnrAccumulator {
 public:
  SnrAccumulator() = default;
  SnrAccumulator(std::uint32_t width, std::uint32_t height, Scheme scheme);

  void add(const AlphaMap& map);
  std::size_t n_frames() const { return frames_; }
  SnrReport finalize() const;
  /// Per-pixel temporal mean (NaN where any frame was invalid).
  AlphaMap mean_map() const;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  Scheme scheme_ = Scheme::quantum;
  std::size_t frames_ = 0;
  std::vector<double> sum_, sum_comp_, sumsq_, sumsq_comp_;
  std::vector<std::uint32_t> count_;
};

SnrReport snr_map(std::span<const AlphaMap> frames);
AlphaMap mean_alpha_map(std::span<const AlphaMap> frames);

/// Frames grouped by their sigma estimate. R fields are filled by the
/// analysis pipeline once per-class SNR maps exist.
struct FrameClass {
  int id = 0;
  double sigma_j = 0.0;
  std::vector<std::size_t> members;
  double r_cl = std::numeric_limits<double>::quiet_NaN();
  double r_cl_err = std::numeric_limits<double>::quiet_NaN();
  double r_dcl = std::numeric_limits<double>::quiet_NaN();
  double r_dcl_err = std::numeric_limits<double>::quiet_NaN();
};

/// Equal-width sigma bins over the observed range; classes with fewer than
/// min_members frames are dropped. Retained classes are disjoint and sorted
/// by strictly increasing sigma_j.
std::vector<FrameClass> classify_frames(std::span<const SigmaEstimate> sigmas, int n_bins,
                                        std::size_t min_members = 20);

struct RatioEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
};

/// Spatial mean of the per-pixel SNR ratio numerator/denominator over the
/// region. Pixels undefined in either report are excluded; more than half
/// excluded is an error.
RatioEstimate r_ratio(const SnrReport& numerator, const SnrReport& denominator,
                      const Region& region);

/// Locates where a measured R(sigma) curve crosses 1 by interpolating
/// 1/R^2, which is affine in sigma for ideal statistics. Extrapolates from
/// the nearest segment when the crossing is not bracketed. Points must be
/// sorted by sigma.
double r_unity_crossing(std::span<const double> sigma, std::span<const double> r);

}  // namespace twinsim
