#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twinsim/errors.hpp"

namespace twinsim {

/// Which beam a frame stack belongs to.
enum class Arm : std::uint8_t { signal = 0, idler = 1, single = 2 };

const char* arm_name(Arm arm);

/// Pixel grid and frame count shared by all stacks of one run.
struct Geometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t n_frames = 0;

  std::size_t n_pixels() const { return std::size_t(width) * height; }

  std::size_t index(std::uint32_t row, std::uint32_t col) const {
    return std::size_t(row) * width + col;
  }

  /// Mirror map m(x) = (width-1-col, height-1-row), the point reflection
  /// through the grid center. In row-major linear indexing this is simply
  /// the reversed index, and it is its own inverse.
  std::size_t mirror_index(std::size_t idx) const { return n_pixels() - 1 - idx; }

  bool operator==(const Geometry&) const = default;

  /// Throws config_error unless width, height and n_frames are all positive.
  void validate() const;
};

/// Integer displacement of the idler sampling point, in pixels.
struct ShiftVector {
  int dx = 0;
  int dy = 0;

  bool operator==(const ShiftVector&) const = default;
  long norm2() const { return long(dx) * dx + long(dy) * dy; }
};

/// A set of pixels of the signal grid over which spatial statistics are
/// taken. The mirrored counterpart on the idler grid is implied by the
/// mirror map (plus an optional shift for decorrelated sampling).
class Region {
 public:
  Region() = default;

  static Region full(const Geometry& geom);

  /// All pixels at least `margin` away from every edge.
  static Region interior(const Geometry& geom, std::uint32_t margin);

  static Region from_indices(const Geometry& geom, std::vector<std::uint32_t> indices);

  std::span<const std::uint32_t> indices() const { return idx_; }
  std::size_t size() const { return idx_.size(); }
  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }

  /// Linear index of the mirrored pixel shifted by `s`, or -1 when the
  /// shifted point falls outside the grid.
  std::int64_t shifted_mirror(std::uint32_t idx, ShiftVector s) const;

 private:
  Region(std::uint32_t w, std::uint32_t h, std::vector<std::uint32_t> idx);

  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint32_t> idx_;
};

}  // namespace twinsim
