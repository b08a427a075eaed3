#include "twinsim/geometry.hpp"

#include <utility>

namespace twinsim {

const char* arm_name(Arm arm) {
  switch (arm) {
    case Arm::signal: return "signal";
    case Arm::idler: return "idler";
    case Arm::single: return "single";
  }
  return "?";
}

void Geometry::validate() const {
  if (width == 0 || height == 0) {
    throw config_error("geometry: width and height must be positive");
  }
  if (n_frames == 0) {
    throw config_error("geometry: n_frames must be positive");
  }
}

Region::Region(std::uint32_t w, std::uint32_t h, std::vector<std::uint32_t> idx)
    : width_(w), height_(h), idx_(std::move(idx)) {
  if (idx_.empty()) throw config_error("region: empty pixel set");
}

Region Region::full(const Geometry& geom) { return interior(geom, 0); }

Region Region::interior(const Geometry& geom, std::uint32_t margin) {
  geom.validate();
  if (2 * margin >= geom.width || 2 * margin >= geom.height) {
    throw config_error("region: margin leaves no pixels");
  }
  std::vector<std::uint32_t> idx;
  idx.reserve(std::size_t(geom.width - 2 * margin) * (geom.height - 2 * margin));
  for (std::uint32_t r = margin; r < geom.height - margin; ++r) {
    for (std::uint32_t c = margin; c < geom.width - margin; ++c) {
      idx.push_back(std::uint32_t(geom.index(r, c)));
    }
  }
  return Region(geom.width, geom.height, std::move(idx));
}

Region Region::from_indices(const Geometry& geom, std::vector<std::uint32_t> indices) {
  geom.validate();
  for (auto i : indices) {
    if (i >= geom.n_pixels()) throw config_error("region: index out of range");
  }
  return Region(geom.width, geom.height, std::move(indices));
}

std::int64_t Region::shifted_mirror(std::uint32_t idx, ShiftVector s) const {
  const std::int64_t npix = std::int64_t(width_) * height_;
  const std::int64_t m = npix - 1 - std::int64_t(idx);
  const std::int64_t row = m / width_ + s.dy;
  const std::int64_t col = m % width_ + s.dx;
  if (row < 0 || col < 0 || row >= std::int64_t(height_) || col >= std::int64_t(width_)) {
    return -1;
  }
  return row * width_ + col;
}

}  // namespace twinsim
