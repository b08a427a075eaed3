#include "twinsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "twinsim/errors.hpp"
#include "twinsim/parallel.hpp"
#include "twinsim/rng.hpp"

namespace twinsim {

namespace {

using count_t = std::uint32_t;

long long thin(std::mt19937_64& eng, count_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<long long> dist(n, p);
  return dist(eng);
}

}  // namespace

void DetectorModel::validate() const {
  if (eta_signal < 0.0 || eta_signal > 1.0 || eta_idler < 0.0 || eta_idler > 1.0) {
    throw config_error("detector: efficiencies must be in [0, 1]");
  }
  if (dark_mean < 0.0) throw config_error("detector: dark_mean must be nonnegative");
  if (read_noise_rms < 0.0) throw config_error("detector: read_noise_rms must be nonnegative");
  if (bin_factor < 1) throw config_error("detector: bin_factor must be >= 1");
}

std::vector<std::string> DetectorModel::warnings() const {
  std::vector<std::string> w;
  if (eta_signal != eta_idler) {
    w.push_back("detector: unbalanced efficiencies; the closed-form sigma = 1 - eta "
                "assumes balanced arms");
  }
  return w;
}

ObjectMask ObjectMask::none(std::uint32_t width, std::uint32_t height) {
  return uniform(width, height, 0.0);
}

ObjectMask ObjectMask::uniform(std::uint32_t width, std::uint32_t height, double alpha) {
  return from_values(width, height,
                     std::vector<double>(std::size_t(width) * height, alpha));
}

ObjectMask ObjectMask::pi_glyph(std::uint32_t width, std::uint32_t height, double alpha) {
  std::vector<double> a(std::size_t(width) * height, 0.0);
  const auto col_lo = [&](double f) { return std::uint32_t(f * width); };
  const auto row_lo = [&](double f) { return std::uint32_t(f * height); };
  const auto paint = [&](std::uint32_t r0, std::uint32_t r1, std::uint32_t c0, std::uint32_t c1) {
    for (std::uint32_t r = r0; r < std::min(r1, height); ++r) {
      for (std::uint32_t c = c0; c < std::min(c1, width); ++c) {
        a[std::size_t(r) * width + c] = alpha;
      }
    }
  };
  // Horizontal bar and two legs.
  paint(row_lo(0.22), row_lo(0.32), col_lo(0.18), col_lo(0.82));
  paint(row_lo(0.32), row_lo(0.80), col_lo(0.30), col_lo(0.40));
  paint(row_lo(0.32), row_lo(0.80), col_lo(0.60), col_lo(0.70));
  return from_values(width, height, std::move(a));
}

ObjectMask ObjectMask::from_values(std::uint32_t width, std::uint32_t height,
                                   std::vector<double> alpha) {
  if (width == 0 || height == 0) throw config_error("mask: empty dimensions");
  if (alpha.size() != std::size_t(width) * height) {
    throw config_error("mask: value count does not match dimensions");
  }
  for (double v : alpha) {
    if (!(v >= 0.0 && v <= 1.0)) throw config_error("mask: alpha outside [0, 1]");
  }
  ObjectMask m;
  m.width_ = width;
  m.height_ = height;
  m.alpha_ = std::move(alpha);
  return m;
}

bool ObjectMask::is_null() const {
  return std::all_of(alpha_.begin(), alpha_.end(), [](double v) { return v == 0.0; });
}

FrameStack apply_object(const FrameStack& signal, const ObjectMask& mask, std::uint64_t seed,
                        unsigned threads) {
  const Geometry& geom = signal.geometry();
  if (mask.width() != geom.width || mask.height() != geom.height) {
    throw data_error("apply_object: mask dimensions do not match the stack");
  }
  FrameStack out(geom, signal.arm());
  const std::size_t npix = geom.n_pixels();
  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, rng::Stream::object_thin, 0), f);
    auto in = signal.frame(f);
    auto o = out.frame(f);
    for (std::size_t i = 0; i < npix; ++i) {
      o[i] = static_cast<count_t>(thin(eng, in[i], 1.0 - mask.alpha(i)));
    }
  });
  return out;
}

FrameStack apply_loss(const FrameStack& stack, double eta, std::uint64_t seed, unsigned threads) {
  if (eta < 0.0 || eta > 1.0) throw config_error("apply_loss: eta must be in [0, 1]");
  const Geometry& geom = stack.geometry();
  FrameStack out(geom, stack.arm());
  if (eta == 1.0) {
    out.data() = stack.data();
    return out;
  }
  if (eta == 0.0) return out;
  const std::size_t npix = geom.n_pixels();
  const rng::Stream stream =
      stack.arm() == Arm::idler ? rng::Stream::loss_idler : rng::Stream::loss_signal;
  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, stream, 0), f);
    auto in = stack.frame(f);
    auto o = out.frame(f);
    for (std::size_t i = 0; i < npix; ++i) {
      o[i] = static_cast<count_t>(thin(eng, in[i], eta));
    }
  });
  return out;
}

FrameStack add_background(const FrameStack& stack, const DetectorModel& det, std::uint64_t seed,
                          unsigned threads) {
  det.validate();
  const Geometry& geom = stack.geometry();
  FrameStack out(geom, stack.arm());
  if (det.dark_mean == 0.0 && det.read_noise_rms == 0.0) {
    out.data() = stack.data();
    return out;
  }
  const std::size_t npix = geom.n_pixels();
  const rng::Stream stream = stack.arm() == Arm::idler ? rng::Stream::background_idler
                                                       : rng::Stream::background_signal;
  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, stream, 0), f);
    std::poisson_distribution<long long> dark(det.dark_mean > 0.0 ? det.dark_mean : 1.0);
    std::normal_distribution<double> read(0.0, det.read_noise_rms > 0.0 ? det.read_noise_rms : 1.0);
    auto in = stack.frame(f);
    auto o = out.frame(f);
    for (std::size_t i = 0; i < npix; ++i) {
      long long v = in[i];
      if (det.dark_mean > 0.0) v += dark(eng);
      if (det.read_noise_rms > 0.0) v += std::llround(read(eng));
      o[i] = v > 0 ? static_cast<count_t>(v) : 0;  // counts stay nonnegative
    }
  });
  return out;
}

FrameStack bin_pixels(const FrameStack& stack, int factor) {
  if (factor < 1) throw config_error("bin_pixels: factor must be >= 1");
  const Geometry& geom = stack.geometry();
  if (factor == 1) return stack;
  if (geom.width % factor != 0 || geom.height % factor != 0) {
    throw data_error("bin_pixels: factor must divide width and height");
  }
  Geometry binned{geom.width / std::uint32_t(factor), geom.height / std::uint32_t(factor),
                  geom.n_frames};
  FrameStack out(binned, stack.arm());
  for (std::size_t f = 0; f < geom.n_frames; ++f) {
    auto in = stack.frame(f);
    auto o = out.frame(f);
    for (std::uint32_t r = 0; r < binned.height; ++r) {
      for (std::uint32_t c = 0; c < binned.width; ++c) {
        std::uint64_t total = 0;
        for (int br = 0; br < factor; ++br) {
          const std::size_t row = std::size_t(r) * factor + br;
          const std::size_t base = row * geom.width + std::size_t(c) * factor;
          for (int bc = 0; bc < factor; ++bc) total += in[base + bc];
        }
        if (total > std::numeric_limits<count_t>::max()) {
          throw data_error("bin_pixels: binned count overflows u32");
        }
        o[binned.index(r, c)] = static_cast<count_t>(total);
      }
    }
  }
  return out;
}

FramePair run_chain(const FrameStack& signal_pre, const FrameStack& idler_pre,
                    const ObjectMask& mask, const DetectorModel& det, std::uint64_t seed,
                    unsigned threads) {
  det.validate();
  if (signal_pre.geometry() != idler_pre.geometry()) {
    throw data_error("run_chain: signal and idler geometries differ");
  }
  // Object on the signal arm only; the idler never sees the mask.
  FrameStack s = apply_object(signal_pre, mask, seed, threads);
  s = apply_loss(s, det.eta_signal, seed, threads);
  FrameStack i = apply_loss(idler_pre, det.eta_idler, seed, threads);
  s = add_background(s, det, seed, threads);
  i = add_background(i, det, seed, threads);
  s = bin_pixels(s, det.bin_factor);
  i = bin_pixels(i, det.bin_factor);
  return FramePair{std::move(s), std::move(i)};
}

}  // namespace twinsim
