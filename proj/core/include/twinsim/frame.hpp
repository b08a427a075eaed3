#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "twinsim/geometry.hpp"

namespace twinsim {

/// A stack of same-sized frames, one value per pixel, frame-major row-major.
template <class T>
class FrameStackT {
 public:
  FrameStackT() = default;

  FrameStackT(Geometry geom, Arm arm)
      : geom_(geom), arm_(arm), data_(geom.n_pixels() * geom.n_frames, T{}) {
    geom_.validate();
  }

  const Geometry& geometry() const { return geom_; }
  Arm arm() const { return arm_; }
  void set_arm(Arm arm) { arm_ = arm; }

  std::size_t n_frames() const { return geom_.n_frames; }
  std::size_t n_pixels() const { return geom_.n_pixels(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> frame(std::size_t f) {
    return std::span<T>(data_.data() + f * n_pixels(), n_pixels());
  }
  std::span<const T> frame(std::size_t f) const {
    return std::span<const T>(data_.data() + f * n_pixels(), n_pixels());
  }

  T at(std::size_t f, std::uint32_t row, std::uint32_t col) const {
    return data_[f * n_pixels() + geom_.index(row, col)];
  }
  T& at(std::size_t f, std::uint32_t row, std::uint32_t col) {
    return data_[f * n_pixels() + geom_.index(row, col)];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  /// Applies the mirror map to every frame (reverses pixel order).
  FrameStackT mirrored() const {
    FrameStackT out(geom_, arm_);
    for (std::size_t f = 0; f < n_frames(); ++f) {
      auto src = frame(f);
      auto dst = out.frame(f);
      std::reverse_copy(src.begin(), src.end(), dst.begin());
    }
    return out;
  }

  bool operator==(const FrameStackT&) const = default;

 private:
  Geometry geom_{};
  Arm arm_ = Arm::single;
  std::vector<T> data_;
};

using FrameStack = FrameStackT<std::uint32_t>;
using RealFrameStack = FrameStackT<double>;

inline RealFrameStack to_real(const FrameStack& s) {
  RealFrameStack out(s.geometry(), s.arm());
  std::copy(s.data().begin(), s.data().end(), out.data().begin());
  return out;
}

/// Detected signal/idler stacks of one run; pixels pair under the mirror map.
struct FramePair {
  FrameStack signal;
  FrameStack idler;
};

struct RealFramePair {
  RealFrameStack signal;
  RealFrameStack idler;
};

inline RealFramePair to_real(const FramePair& p) {
  return RealFramePair{to_real(p.signal), to_real(p.idler)};
}

}  // namespace twinsim
