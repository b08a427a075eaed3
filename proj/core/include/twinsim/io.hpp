#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "twinsim/detector.hpp"
#include "twinsim/estimators.hpp"
#include "twinsim/frame.hpp"

namespace twinsim::io {

// --- FSTK1 frame-stack format -------------------------------------------
//
// Little-endian header: magic "FSTK1", u32 width, u32 height, u32 n_frames,
// u8 arm tag (0 signal, 1 idler, 2 single), u8 dtype (4 = u32), followed by
// the frames row-major as u32. Bit-exact across platforms.

void write_fstk(const std::filesystem::path& path, const FrameStack& stack);
FrameStack read_fstk(const std::filesystem::path& path);

// --- P5 (binary) PGM ------------------------------------------------------

struct PgmImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t maxval = 255;
  std::vector<std::uint16_t> pixels;  // row-major; one sample per pixel
};

void write_pgm(const std::filesystem::path& path, const PgmImage& image);
PgmImage read_pgm(const std::filesystem::path& path);

/// Interprets a grayscale image as an absorption mask, alpha = gray / maxval.
ObjectMask mask_from_pgm(const PgmImage& image);
ObjectMask load_mask_pgm(const std::filesystem::path& path);

// --- Rendering real-valued maps to 16-bit PGM ----------------------------

struct AffineScale {
  double lo = 0.0;
  double hi = 1.0;
};

/// gray = round((v - lo) / (hi - lo) * maxval), clamped; NaN renders as 0.
PgmImage render_to_pgm(std::span<const double> values, std::uint32_t width, std::uint32_t height,
                       AffineScale scale, std::uint16_t maxval = 65535);

/// Smallest scale covering all finite values (lo = hi degenerates to a unit
/// span so the render stays defined).
AffineScale auto_scale(std::span<const double> values);

/// Writes the rendered PGM plus a JSON sidecar (path + ".json") recording
/// the affine scaling and a kind label so values can be recovered.
void write_values_pgm(const std::filesystem::path& path, std::span<const double> values,
                      std::uint32_t width, std::uint32_t height, AffineScale scale,
                      std::uint16_t maxval, const std::string& kind);

/// write_values_pgm for an absorption map, labelled with its scheme.
void write_map_pgm(const std::filesystem::path& path, const AlphaMap& map, AffineScale scale,
                   std::uint16_t maxval = 65535);

// --- RFC-4180 CSV ----------------------------------------------------------

/// Minimal CSV emitter: CRLF line endings, quoting only where required.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void row(std::span<const std::string> fields);
  void row(std::initializer_list<std::string> fields);
  void flush();

 private:
  std::ofstream out_;
};

std::string format_double(double v);

/// Strict-enough RFC-4180 reader used by tests and the render tool.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace twinsim::io
