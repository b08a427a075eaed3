#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinsim/frame.hpp"
#include "twinsim/geometry.hpp"

namespace twinsim {

enum class SourceKind { twin, coherent, thermal, coherent_split };

const char* source_kind_name(SourceKind kind);
SourceKind source_kind_from_name(const std::string& name);

/// Probability weights for where an idler photon lands relative to the
/// mirror of its signal pixel. Models a finite coherence area: a delta
/// kernel is the ideal limit of a pixel much larger than the coherence
/// area, wider kernels leak pair correlation into neighbouring pixels.
class PairKernel {
 public:
  PairKernel() : radius_(0), weights_{1.0} { build_order(); }

  static PairKernel delta() { return PairKernel(); }
  static PairKernel uniform(int radius);
  /// Discrete Gaussian, weight(d) ~ exp(-|d|^2 / (2 sigma_px^2)), truncated
  /// at `radius` and renormalized.
  static PairKernel gaussian(int radius, double sigma_px);
  /// Validates and adopts explicit weights on the (2r+1)^2 offset grid,
  /// row-major from (-r,-r) to (r,r). Weights must be nonnegative and sum
  /// to 1 within 1e-12.
  static PairKernel from_weights(int radius, std::vector<double> weights);

  int radius() const { return radius_; }
  bool is_delta() const { return radius_ == 0; }
  std::span<const double> weights() const { return weights_; }
  double weight(int dy, int dx) const {
    return weights_[std::size_t(dy + radius_) * (2 * radius_ + 1) + (dx + radius_)];
  }
  /// Offset indices sorted by descending weight; the multinomial splitter
  /// visits them in this order so that concentrated kernels terminate early.
  std::span<const std::uint32_t> draw_order() const { return order_; }

 private:
  void build_order();

  int radius_;
  std::vector<double> weights_;
  std::vector<std::uint32_t> order_;
};

/// Photon statistics of the light source, per pixel and frame, before any
/// detection loss. `modes` is the multithermal mode number M; the count law
/// is a Gamma-Poisson mixture with mean n0 and variance n0 (1 + n0 / M).
struct SourceModel {
  SourceKind kind = SourceKind::twin;
  double n0 = 0.0;
  double modes = 1.0;
  PairKernel spread;

  void validate() const;
};

/// Physical mode budget M = (T_pump / T_coh) * (A_pix / A_coh).
struct ModeBudget {
  double t_pump_s = 0.0;
  double t_coh_s = 0.0;
  double a_pix_m2 = 0.0;
  double a_coh_m2 = 0.0;
};

/// Number of modes collected per pixel. Throws config_error on non-positive
/// fields; ratios below 1 are legal but worth flagging (see
/// mode_budget_warnings).
double mode_budget(const ModeBudget& b);
std::vector<std::string> mode_budget_warnings(const ModeBudget& b);

/// Closed-form pre-detection moments of a source, used as the independent
/// oracle for the samplers.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double excess_noise = 0.0;  // (variance - mean) / mean, 0 at mean 0
};

Moments moments_oracle(const SourceModel& source);

/// Correlated twin-beam pair counts before detection. For every pixel x a
/// pair count n(x) is drawn from the multithermal law; the signal arm
/// records n(x) at x and the idler arm redistributes the same n(x) photons
/// around the mirrored pixel according to source.spread (photons spread
/// past the frame edge are dropped).
FramePair gen_twin_pairs(const SourceModel& source, const Geometry& geom, std::uint64_t seed,
                         unsigned threads = 1);

/// i.i.d. Poisson(n0) counts.
FrameStack gen_coherent(double n0, const Geometry& geom, std::uint64_t seed,
                        unsigned threads = 1);

/// i.i.d. multithermal counts (Gamma-Poisson, shape = modes, mean = n0).
FrameStack gen_thermal(double n0, double modes, const Geometry& geom, std::uint64_t seed,
                       unsigned threads = 1);

/// Routes each photon independently with probability `transmit` into the
/// first output. Totals are conserved exactly per pixel and frame.
std::pair<FrameStack, FrameStack> split_frames(const FrameStack& input, double transmit,
                                               std::uint64_t seed, unsigned threads = 1);

/// Exact multinomial split of n into `weights.size()` buckets, by chained
/// conditional binomials in the given order. Returned counts sum to n.
std::vector<std::uint32_t> multinomial_split(std::uint32_t n, std::span<const double> weights,
                                             std::mt19937_64& eng);

}  // namespace twinsim
