#include "twinsim/source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "twinsim/errors.hpp"
#include "twinsim/parallel.hpp"
#include "twinsim/rng.hpp"

namespace twinsim {

namespace {

constexpr double kWeightSumTol = 1e-12;

using count_t = std::uint32_t;

count_t checked_count(long long v) {
  if (v < 0 || v > std::numeric_limits<count_t>::max()) {
    throw data_error("photon count out of range for u32 storage");
  }
  return static_cast<count_t>(v);
}

/// One multithermal draw: rate ~ Gamma(shape = modes, mean = n0), then
/// count ~ Poisson(rate). Matches the negative-binomial moments
/// mean = n0, variance = n0 (1 + n0 / modes) for any real modes > 0.
long long draw_multithermal(std::mt19937_64& eng, std::gamma_distribution<double>& gamma,
                            std::poisson_distribution<long long>& poisson) {
  const double rate = gamma(eng);
  if (rate <= 0.0) return 0;
  return poisson(eng, std::poisson_distribution<long long>::param_type(rate));
}

long long draw_binomial(std::mt19937_64& eng, long long n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<long long> dist(n, p);
  return dist(eng);
}

}  // namespace

const char* source_kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::twin: return "twin";
    case SourceKind::coherent: return "coherent";
    case SourceKind::thermal: return "thermal";
    case SourceKind::coherent_split: return "coherent_split";
  }
  return "?";
}

SourceKind source_kind_from_name(const std::string& name) {
  if (name == "twin") return SourceKind::twin;
  if (name == "coherent") return SourceKind::coherent;
  if (name == "thermal") return SourceKind::thermal;
  if (name == "coherent_split") return SourceKind::coherent_split;
  throw config_error("unknown source kind: " + name);
}

PairKernel PairKernel::uniform(int radius) {
  if (radius < 0) throw config_error("kernel: radius must be nonnegative");
  const std::size_t side = 2 * std::size_t(radius) + 1;
  return from_weights(radius, std::vector<double>(side * side, 1.0 / double(side * side)));
}

PairKernel PairKernel::gaussian(int radius, double sigma_px) {
  if (radius < 0) throw config_error("kernel: radius must be nonnegative");
  if (sigma_px <= 0.0) throw config_error("kernel: sigma_px must be positive");
  const int side = 2 * radius + 1;
  std::vector<double> w(std::size_t(side) * side);
  double total = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v = std::exp(-0.5 * (double(dy) * dy + double(dx) * dx) / (sigma_px * sigma_px));
      w[std::size_t(dy + radius) * side + (dx + radius)] = v;
      total += v;
    }
  }
  for (double& v : w) v /= total;
  return from_weights(radius, std::move(w));
}

PairKernel PairKernel::from_weights(int radius, std::vector<double> weights) {
  if (radius < 0) throw config_error("kernel: radius must be nonnegative");
  const std::size_t side = 2 * std::size_t(radius) + 1;
  if (weights.size() != side * side) {
    throw config_error("kernel: weight grid must be (2r+1)^2");
  }
  double total = 0.0;
  for (double v : weights) {
    if (v < 0.0) throw config_error("kernel: weights must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw config_error("kernel: weights must sum to 1 within 1e-12");
  }
  PairKernel k;
  k.radius_ = radius;
  k.weights_ = std::move(weights);
  k.build_order();
  return k;
}

void PairKernel::build_order() {
  order_.resize(weights_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return weights_[a] > weights_[b]; });
}

void SourceModel::validate() const {
  if (n0 < 0.0) throw config_error("source: n0 must be nonnegative");
  if (!(modes > 0.0)) throw config_error("source: modes must be positive");
}

double mode_budget(const ModeBudget& b) {
  if (!(b.t_pump_s > 0.0) || !(b.t_coh_s > 0.0) || !(b.a_pix_m2 > 0.0) || !(b.a_coh_m2 > 0.0)) {
    throw config_error("mode budget: all fields must be strictly positive");
  }
  return (b.t_pump_s / b.t_coh_s) * (b.a_pix_m2 / b.a_coh_m2);
}

std::vector<std::string> mode_budget_warnings(const ModeBudget& b) {
  std::vector<std::string> w;
  if (b.t_pump_s < b.t_coh_s) w.push_back("mode budget: pump shorter than coherence time");
  if (b.a_pix_m2 < b.a_coh_m2) w.push_back("mode budget: pixel smaller than coherence area");
  return w;
}

Moments moments_oracle(const SourceModel& source) {
  source.validate();
  Moments m;
  switch (source.kind) {
    case SourceKind::twin:
    case SourceKind::thermal:
      m.mean = source.n0;
      m.variance = source.n0 * (1.0 + source.n0 / source.modes);
      m.excess_noise = source.n0 > 0.0 ? source.n0 / source.modes : 0.0;
      break;
    case SourceKind::coherent:
    case SourceKind::coherent_split:
      // coherent_split moments are per arm after the 50% split, which is
      // again Poissonian with the per-arm mean.
      m.mean = source.n0;
      m.variance = source.n0;
      m.excess_noise = 0.0;
      break;
  }
  return m;
}

std::vector<std::uint32_t> multinomial_split(std::uint32_t n, std::span<const double> weights,
                                             std::mt19937_64& eng) {
  std::vector<std::uint32_t> out(weights.size(), 0);
  double remaining_weight = 0.0;
  for (double w : weights) remaining_weight += w;
  long long remaining = n;
  for (std::size_t k = 0; k < weights.size() && remaining > 0; ++k) {
    if (k + 1 == weights.size()) {
      out[k] = static_cast<std::uint32_t>(remaining);
      break;
    }
    const double p = std::clamp(weights[k] / remaining_weight, 0.0, 1.0);
    const long long taken = draw_binomial(eng, remaining, p);
    out[k] = static_cast<std::uint32_t>(taken);
    remaining -= taken;
    remaining_weight -= weights[k];
    if (remaining_weight <= 0.0 && remaining > 0) {
      out[k] += static_cast<std::uint32_t>(remaining);  // numerical guard
      remaining = 0;
    }
  }
  return out;
}

FramePair gen_twin_pairs(const SourceModel& source, const Geometry& geom, std::uint64_t seed,
                         unsigned threads) {
  geom.validate();
  source.validate();
  if (source.kind != SourceKind::twin) {
    throw config_error("gen_twin_pairs: source kind must be twin");
  }

  FramePair out{FrameStack(geom, Arm::signal), FrameStack(geom, Arm::idler)};
  if (source.n0 == 0.0) return out;

  const std::size_t npix = geom.n_pixels();
  const PairKernel& kernel = source.spread;
  const int radius = kernel.radius();
  const int side = 2 * radius + 1;
  const auto order = kernel.draw_order();
  const auto weights = kernel.weights();

  // Kernel weights in draw order, for the chained-binomial splitter.
  std::vector<double> ordered_weights(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) ordered_weights[k] = weights[order[k]];

  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, rng::Stream::twin_pairs, 0), f);
    std::gamma_distribution<double> gamma(source.modes, source.n0 / source.modes);
    std::poisson_distribution<long long> poisson;
    auto sig = out.signal.frame(f);
    auto idl = out.idler.frame(f);

    if (kernel.is_delta()) {
      for (std::size_t i = 0; i < npix; ++i) {
        const count_t n = checked_count(draw_multithermal(eng, gamma, poisson));
        sig[i] = n;
        idl[npix - 1 - i] = n;
      }
      return;
    }

    std::vector<std::uint32_t> buckets;
    for (std::size_t i = 0; i < npix; ++i) {
      const count_t n = checked_count(draw_multithermal(eng, gamma, poisson));
      sig[i] = n;
      if (n == 0) continue;
      const std::size_t m = npix - 1 - i;
      const std::int64_t mrow = std::int64_t(m) / geom.width;
      const std::int64_t mcol = std::int64_t(m) % geom.width;
      buckets = multinomial_split(n, ordered_weights, eng);
      for (std::size_t k = 0; k < buckets.size(); ++k) {
        if (buckets[k] == 0) continue;
        const std::uint32_t offset = order[k];
        const std::int64_t dy = std::int64_t(offset) / side - radius;
        const std::int64_t dx = std::int64_t(offset) % side - radius;
        const std::int64_t row = mrow + dy;
        const std::int64_t col = mcol + dx;
        if (row < 0 || col < 0 || row >= std::int64_t(geom.height) ||
            col >= std::int64_t(geom.width)) {
          continue;  // vignetting: photons past the frame edge are dropped
        }
        idl[std::size_t(row) * geom.width + col] += buckets[k];
      }
    }
  });
  return out;
}

FrameStack gen_coherent(double n0, const Geometry& geom, std::uint64_t seed, unsigned threads) {
  geom.validate();
  if (n0 < 0.0) throw config_error("gen_coherent: n0 must be nonnegative");
  FrameStack out(geom, Arm::single);
  if (n0 == 0.0) return out;
  const std::size_t npix = geom.n_pixels();
  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, rng::Stream::coherent, 0), f);
    std::poisson_distribution<long long> poisson(n0);
    auto frame = out.frame(f);
    for (std::size_t i = 0; i < npix; ++i) frame[i] = checked_count(poisson(eng));
  });
  return out;
}

FrameStack gen_thermal(double n0, double modes, const Geometry& geom, std::uint64_t seed,
                       unsigned threads) {
  geom.validate();
  if (n0 < 0.0) throw config_error("gen_thermal: n0 must be nonnegative");
  if (!(modes > 0.0)) throw config_error("gen_thermal: modes must be positive");
  FrameStack out(geom, Arm::single);
  if (n0 == 0.0) return out;
  const std::size_t npix = geom.n_pixels();
  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, rng::Stream::thermal, 0), f);
    std::gamma_distribution<double> gamma(modes, n0 / modes);
    std::poisson_distribution<long long> poisson;
    auto frame = out.frame(f);
    for (std::size_t i = 0; i < npix; ++i) {
      frame[i] = checked_count(draw_multithermal(eng, gamma, poisson));
    }
  });
  return out;
}

std::pair<FrameStack, FrameStack> split_frames(const FrameStack& input, double transmit,
                                               std::uint64_t seed, unsigned threads) {
  if (transmit < 0.0 || transmit > 1.0) {
    throw config_error("split_frames: transmit must be in [0, 1]");
  }
  const Geometry& geom = input.geometry();
  FrameStack out1(geom, Arm::signal);
  FrameStack out2(geom, Arm::idler);
  const std::size_t npix = geom.n_pixels();
  parallel_for(geom.n_frames, threads, [&](std::size_t f) {
    auto eng = rng::frame_engine(rng::derive_seed(seed, rng::Stream::split, 0), f);
    auto in = input.frame(f);
    auto a = out1.frame(f);
    auto b = out2.frame(f);
    for (std::size_t i = 0; i < npix; ++i) {
      const long long kept = draw_binomial(eng, in[i], transmit);
      a[i] = static_cast<count_t>(kept);
      b[i] = in[i] - static_cast<count_t>(kept);
    }
  });
  return {std::move(out1), std::move(out2)};
}

}  // namespace twinsim
