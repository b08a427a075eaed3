#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twinsim/frame.hpp"
#include "twinsim/geometry.hpp"

namespace twinsim {

/// Detection chain parameters for both arms.
struct DetectorModel {
  double eta_signal = 1.0;
  double eta_idler = 1.0;
  double dark_mean = 0.0;       // counts / pixel / frame
  double read_noise_rms = 0.0;  // counts
  int bin_factor = 1;

  void validate() const;
  /// Non-fatal conditions, e.g. unbalanced efficiencies (the closed-form
  /// sigma = 1 - eta assumes balanced arms).
  std::vector<std::string> warnings() const;
};

/// Per-pixel absorption alpha(x) in [0, 1], applied to the signal arm only.
class ObjectMask {
 public:
  ObjectMask() = default;

  static ObjectMask none(std::uint32_t width, std::uint32_t height);
  static ObjectMask uniform(std::uint32_t width, std::uint32_t height, double alpha);
  /// Procedural pi-shaped glyph with uniform absorption `alpha` inside the
  /// glyph strokes and 0 outside.
  static ObjectMask pi_glyph(std::uint32_t width, std::uint32_t height, double alpha);
  static ObjectMask from_values(std::uint32_t width, std::uint32_t height,
                                std::vector<double> alpha);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  double alpha(std::size_t idx) const { return alpha_[idx]; }
  double alpha(std::uint32_t row, std::uint32_t col) const {
    return alpha_[std::size_t(row) * width_ + col];
  }
  const std::vector<double>& values() const { return alpha_; }
  bool is_null() const;  // all zero

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<double> alpha_;
};

/// Binomial thinning by the per-pixel survival probability 1 - alpha(x).
FrameStack apply_object(const FrameStack& signal, const ObjectMask& mask, std::uint64_t seed,
                        unsigned threads = 1);

/// Binomial thinning by a uniform efficiency eta in [0, 1].
FrameStack apply_loss(const FrameStack& stack, double eta, std::uint64_t seed,
                      unsigned threads = 1);

/// Adds Poisson(dark_mean) counts plus rounded zero-mean Gaussian read
/// noise, clamped at zero.
FrameStack add_background(const FrameStack& stack, const DetectorModel& det, std::uint64_t seed,
                          unsigned threads = 1);

/// Sums factor x factor blocks. `factor` must divide both dimensions;
/// totals are conserved exactly.
FrameStack bin_pixels(const FrameStack& stack, int factor);

/// Full detection chain: object on the signal arm only, then per-arm loss,
/// background and binning on both arms.
FramePair run_chain(const FrameStack& signal_pre, const FrameStack& idler_pre,
                    const ObjectMask& mask, const DetectorModel& det, std::uint64_t seed,
                    unsigned threads = 1);

}  // namespace twinsim
