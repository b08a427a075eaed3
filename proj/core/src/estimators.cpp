#include "twinsim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twinsim/errors.hpp"
#include "twinsim/numeric.hpp"
#include "twinsim/parallel.hpp"

namespace twinsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pair(const RealFramePair& pair) {
  if (pair.signal.geometry() != pair.idler.geometry()) {
    throw data_error("pair: signal and idler geometries differ");
  }
}

void check_region(const Region& region, const Geometry& geom) {
  if (region.width() != geom.width || region.height() != geom.height) {
    throw data_error("region does not match the stack geometry");
  }
}

/// sigma of one frame with the idler sampled at m(x) + shift. The caller
/// guarantees shifted indices stay inside the grid.
double sigma_with_shift(const RealFramePair& pair, const Region& region, std::size_t frame,
                        ShiftVector shift) {
  auto sig = pair.signal.frame(frame);
  auto idl = pair.idler.frame(frame);
  NeumaierSum sum_d, sum_s, sum_i;
  for (std::uint32_t i : region.indices()) {
    const std::int64_t j = region.shifted_mirror(i, shift);
    const double d = idl[std::size_t(j)] - sig[i];
    sum_d.add(d);
    sum_s.add(sig[i]);
    sum_i.add(idl[std::size_t(j)]);
  }
  const double n = double(region.size());
  const double mean_sum = (sum_s.value() + sum_i.value()) / n;
  if (mean_sum <= 0.0) throw data_error("sigma: empty illumination (mean sum <= 0)");
  const double mean_d = sum_d.value() / n;
  NeumaierSum sq;
  for (std::uint32_t i : region.indices()) {
    const std::int64_t j = region.shifted_mirror(i, shift);
    const double d = idl[std::size_t(j)] - sig[i] - mean_d;
    sq.add(d * d);
  }
  return sq.value() / n / mean_sum;
}

}  // namespace

const char* scheme_tag(Scheme s) {
  switch (s) {
    case Scheme::quantum: return "q";
    case Scheme::diff_classical: return "dcl";
    case Scheme::direct_classical: return "cl";
  }
  return "?";
}

SigmaEstimate estimate_sigma(const RealFramePair& pair, const Region& region,
                             std::size_t frame) {
  check_pair(pair);
  check_region(region, pair.signal.geometry());
  auto sig = pair.signal.frame(frame);
  auto idl = pair.idler.frame(frame);
  const std::size_t last = pair.signal.n_pixels() - 1;

  NeumaierSum sum_d, sum_s, sum_i;
  for (std::uint32_t i : region.indices()) {
    const double s = sig[i];
    const double v = idl[last - i];
    sum_d.add(v - s);
    sum_s.add(s);
    sum_i.add(v);
  }
  const double n = double(region.size());
  SigmaEstimate out;
  out.frame_id = frame;
  out.n_pixels = region.size();
  out.mean_signal = sum_s.value() / n;
  out.mean_idler = sum_i.value() / n;
  const double mean_sum = out.mean_signal + out.mean_idler;
  if (mean_sum <= 0.0) throw data_error("sigma: empty illumination (mean sum <= 0)");
  const double mean_d = sum_d.value() / n;
  NeumaierSum sq;
  for (std::uint32_t i : region.indices()) {
    const double d = idl[last - i] - sig[i] - mean_d;
    sq.add(d * d);
  }
  out.sigma = sq.value() / n / mean_sum;  // population variance, spatial ensemble
  return out;
}

std::vector<SigmaEstimate> estimate_sigma_stack(const RealFramePair& pair, const Region& region,
                                                unsigned threads) {
  std::vector<SigmaEstimate> out(pair.signal.n_frames());
  parallel_for(out.size(), threads,
               [&](std::size_t f) { out[f] = estimate_sigma(pair, region, f); });
  return out;
}

SigmaSummary summarize_sigma(std::span<const SigmaEstimate> sigmas) {
  SigmaSummary s;
  const auto mv = mean_variance(sigmas.begin(), sigmas.end(),
                                [](const SigmaEstimate& e) { return e.sigma; });
  s.n_frames = mv.n;
  s.mean = mv.mean;
  s.sd = std::sqrt(mv.var_sample);
  s.se = mv.n > 0 ? s.sd / std::sqrt(double(mv.n)) : 0.0;
  return s;
}

double estimate_excess_noise(const RealFrameStack& stack, const Region& region,
                             std::size_t frame) {
  check_region(region, stack.geometry());
  auto data = stack.frame(frame);
  const auto mv = mean_variance(region.indices().begin(), region.indices().end(),
                                [&](std::uint32_t i) { return data[i]; });
  if (mv.mean <= 0.0) throw data_error("excess noise: mean must be positive");
  return (mv.var_pop - mv.mean) / mv.mean;
}

double estimate_excess_noise(const RealFrameStack& stack, const Region& region) {
  NeumaierSum sum;
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    sum.add(estimate_excess_noise(stack, region, f));
  }
  return sum.value() / double(stack.n_frames());
}

FlatFieldGains flat_field_gains(const RealFrameStack& stack) {
  if (stack.n_frames() < 2) throw data_error("flat field: need at least 2 frames");
  const std::size_t npix = stack.n_pixels();
  std::vector<double> temporal(npix, 0.0), comp(npix, 0.0);
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    auto frame = stack.frame(f);
    for (std::size_t i = 0; i < npix; ++i) {
      const double v = frame[i];
      const double t = temporal[i] + v;
      if (std::abs(temporal[i]) >= std::abs(v)) {
        comp[i] += (temporal[i] - t) + v;
      } else {
        comp[i] += (v - t) + temporal[i];
      }
      temporal[i] = t;
    }
  }
  NeumaierSum global;
  for (std::size_t i = 0; i < npix; ++i) {
    temporal[i] = (temporal[i] + comp[i]) / double(stack.n_frames());
    global.add(temporal[i]);
  }
  const double global_mean = global.value() / double(npix);
  FlatFieldGains g;
  g.width = stack.geometry().width;
  g.height = stack.geometry().height;
  g.gain.resize(npix);
  for (std::size_t i = 0; i < npix; ++i) {
    if (temporal[i] == 0.0) throw data_error("flat field: pixel with zero temporal mean");
    g.gain[i] = global_mean / temporal[i];
  }
  return g;
}

RealFrameStack apply_gains(const RealFrameStack& stack, const FlatFieldGains& gains) {
  if (gains.is_unity()) return stack;
  if (gains.width != stack.geometry().width || gains.height != stack.geometry().height) {
    throw data_error("flat field: gain dimensions do not match the stack");
  }
  RealFrameStack out(stack.geometry(), stack.arm());
  const std::size_t npix = stack.n_pixels();
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    auto in = stack.frame(f);
    auto o = out.frame(f);
    for (std::size_t i = 0; i < npix; ++i) o[i] = gains.gain[i] * in[i];
  }
  return out;
}

RealFrameStack flat_field(const RealFrameStack& stack) {
  return apply_gains(stack, flat_field_gains(stack));
}

RealFrameStack flat_field(const FrameStack& stack) { return flat_field(to_real(stack)); }

CenterCalibration calibrate_center(const RealFramePair& pair, int search_radius) {
  check_pair(pair);
  if (search_radius < 0) throw config_error("calibrate_center: negative search radius");
  if (pair.signal.n_frames() < 10) {
    throw config_error("calibrate_center: need at least 10 frames");
  }
  const Geometry& geom = pair.signal.geometry();
  const Region region = Region::interior(geom, std::uint32_t(search_radius));
  const std::size_t n_frames = pair.signal.n_frames();

  struct Candidate {
    ShiftVector shift;
    double mean = 0.0;
    double se = 0.0;
  };
  std::vector<Candidate> candidates;
  std::vector<double> per_frame(n_frames);
  bool any = false;
  for (int dy = -search_radius; dy <= search_radius; ++dy) {
    for (int dx = -search_radius; dx <= search_radius; ++dx) {
      const ShiftVector s{dx, dy};
      bool ok = true;
      for (std::size_t f = 0; f < n_frames; ++f) {
        try {
          per_frame[f] = sigma_with_shift(pair, region, f, s);
        } catch (const data_error&) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      any = true;
      const auto mv = mean_variance(per_frame.begin(), per_frame.end(),
                                    [](double v) { return v; });
      candidates.push_back(
          {s, mv.mean, std::sqrt(mv.var_sample / double(std::max<std::size_t>(mv.n, 1)))});
    }
  }
  if (!any) throw data_error("calibrate_center: sigma not computable at any shift");

  const auto better = [](const Candidate& a, const Candidate& b) {
    if (a.mean != b.mean) return a.mean < b.mean;
    if (a.shift.norm2() != b.shift.norm2()) return a.shift.norm2() < b.shift.norm2();
    if (a.shift.dy != b.shift.dy) return a.shift.dy < b.shift.dy;
    return a.shift.dx < b.shift.dx;
  };
  const Candidate& best = *std::min_element(candidates.begin(), candidates.end(), better);

  std::vector<double> means;
  means.reserve(candidates.size());
  for (const auto& c : candidates) means.push_back(c.mean);
  std::nth_element(means.begin(), means.begin() + means.size() / 2, means.end());
  const double median = means[means.size() / 2];

  CenterCalibration out;
  out.shift = best.shift;
  out.sigma_at_min = best.mean;
  out.depth = best.se > 0.0 ? (median - best.mean) / best.se
                            : std::numeric_limits<double>::infinity();
  // A flat sigma surface (depth within noise) means there is nothing to
  // register against, e.g. statistically independent arms.
  out.low_confidence = !(out.depth >= 5.0);
  return out;
}

AlphaMap alpha_quantum(const RealFramePair& pair, std::size_t frame, double n_i_ref) {
  check_pair(pair);
  if (!(n_i_ref > 0.0)) throw config_error("alpha_q: reference must be positive");
  const Geometry& geom = pair.signal.geometry();
  auto sig = pair.signal.frame(frame);
  auto idl = pair.idler.frame(frame);
  const std::size_t npix = geom.n_pixels();
  AlphaMap map{geom.width, geom.height, Scheme::quantum, std::vector<double>(npix)};
  for (std::size_t i = 0; i < npix; ++i) {
    map.values[i] = (idl[npix - 1 - i] - sig[i]) / n_i_ref;
  }
  return map;
}

AlphaMap alpha_diff_classical(const RealFramePair& pair, std::size_t frame, ShiftVector shift,
                              double n_i_ref) {
  check_pair(pair);
  if (!(n_i_ref > 0.0)) throw config_error("alpha_dcl: reference must be positive");
  const Geometry& geom = pair.signal.geometry();
  auto sig = pair.signal.frame(frame);
  auto idl = pair.idler.frame(frame);
  const std::size_t npix = geom.n_pixels();
  AlphaMap map{geom.width, geom.height, Scheme::diff_classical, std::vector<double>(npix)};
  const std::int64_t w = geom.width;
  const std::int64_t h = geom.height;
  for (std::size_t i = 0; i < npix; ++i) {
    const std::size_t m = npix - 1 - i;
    const std::int64_t row = std::int64_t(m) / w + shift.dy;
    const std::int64_t col = std::int64_t(m) % w + shift.dx;
    if (row < 0 || col < 0 || row >= h || col >= w) {
      map.values[i] = AlphaMap::invalid_value();  // shifted reference out of bounds
    } else {
      map.values[i] = (idl[std::size_t(row) * w + col] - sig[i]) / n_i_ref;
    }
  }
  return map;
}

AlphaMap alpha_direct_classical(const RealFrameStack& signal, std::size_t frame,
                                double n_i_ref) {
  if (!(n_i_ref > 0.0)) throw config_error("alpha_cl: reference must be positive");
  const Geometry& geom = signal.geometry();
  auto sig = signal.frame(frame);
  const std::size_t npix = geom.n_pixels();
  AlphaMap map{geom.width, geom.height, Scheme::direct_classical, std::vector<double>(npix)};
  for (std::size_t i = 0; i < npix; ++i) {
    map.values[i] = (n_i_ref - sig[i]) / n_i_ref;
  }
  return map;
}

SnrAccumulator::SnrAccumulator(std::uint32_t width, std::uint32_t height, Scheme scheme)
    : width_(width),
      height_(height),
      scheme_(scheme),
      sum_(std::size_t(width) * height, 0.0),
      sum_comp_(std::size_t(width) * height, 0.0),
      sumsq_(std::size_t(width) * height, 0.0),
      sumsq_comp_(std::size_t(width) * height, 0.0),
      count_(std::size_t(width) * height, 0) {}

void SnrAccumulator::add(const AlphaMap& map) {
  if (map.width != width_ || map.height != height_ || map.scheme != scheme_) {
    throw data_error("snr accumulator: map does not match");
  }
  const std::size_t npix = sum_.size();
  for (std::size_t i = 0; i < npix; ++i) {
    const double v = map.values[i];
    if (v != v) continue;
    double t = sum_[i] + v;
    sum_comp_[i] += std::abs(sum_[i]) >= std::abs(v) ? (sum_[i] - t) + v : (v - t) + sum_[i];
    sum_[i] = t;
    const double v2 = v * v;
    t = sumsq_[i] + v2;
    sumsq_comp_[i] +=
        std::abs(sumsq_[i]) >= std::abs(v2) ? (sumsq_[i] - t) + v2 : (v2 - t) + sumsq_[i];
    sumsq_[i] = t;
    ++count_[i];
  }
  ++frames_;
}

SnrReport SnrAccumulator::finalize() const {
  if (frames_ < 2) throw data_error("snr: need at least 2 frames");
  SnrReport rep;
  rep.scheme = scheme_;
  rep.width = width_;
  rep.height = height_;
  rep.n_frames = frames_;
  rep.snr.assign(sum_.size(), kNaN);
  NeumaierSum spatial;
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (count_[i] != frames_) continue;  // only pixels defined in every frame
    const double n = double(frames_);
    const double s = sum_[i] + sum_comp_[i];
    const double mean = s / n;
    const double total_sq = sumsq_[i] + sumsq_comp_[i];
    const double ss = total_sq - s * s / n;
    // Constant pixels leave only rounding residue in ss; flag them
    // undefined instead of reporting a spuriously huge SNR.
    if (!(ss > total_sq * 1e-13)) continue;
    const double var = ss / (n - 1.0);  // unbiased temporal variance
    rep.snr[i] = mean / std::sqrt(var);
    spatial.add(rep.snr[i]);
    ++rep.n_defined;
  }
  rep.spatial_mean = rep.n_defined > 0 ? spatial.value() / double(rep.n_defined) : kNaN;
  return rep;
}

AlphaMap SnrAccumulator::mean_map() const {
  AlphaMap map{width_, height_, scheme_, std::vector<double>(sum_.size(), kNaN)};
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (count_[i] != frames_ || frames_ == 0) continue;
    map.values[i] = (sum_[i] + sum_comp_[i]) / double(frames_);
  }
  return map;
}

SnrReport snr_map(std::span<const AlphaMap> frames) {
  if (frames.size() < 2) throw data_error("snr: need at least 2 frames");
  SnrAccumulator acc(frames[0].width, frames[0].height, frames[0].scheme);
  for (const auto& m : frames) acc.add(m);
  return acc.finalize();
}

AlphaMap mean_alpha_map(std::span<const AlphaMap> frames) {
  if (frames.empty()) throw data_error("mean map: no frames");
  SnrAccumulator acc(frames[0].width, frames[0].height, frames[0].scheme);
  for (const auto& m : frames) acc.add(m);
  return acc.mean_map();
}

std::vector<FrameClass> classify_frames(std::span<const SigmaEstimate> sigmas, int n_bins,
                                        std::size_t min_members) {
  if (n_bins < 1) throw config_error("classify: n_bins must be >= 1");
  if (sigmas.empty()) throw data_error("classify: no frames");
  min_members = std::max<std::size_t>(min_members, 2);  // SNR needs two frames

  double lo = sigmas[0].sigma, hi = sigmas[0].sigma;
  for (const auto& s : sigmas) {
    lo = std::min(lo, s.sigma);
    hi = std::max(hi, s.sigma);
  }
  const double width = (hi - lo) / double(n_bins);

  const std::size_t bin_count = std::size_t(n_bins);
  std::vector<FrameClass> bins(bin_count);
  for (const auto& s : sigmas) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = std::min(std::size_t((s.sigma - lo) / width), std::size_t(n_bins) - 1);
    }
    bins[b].members.push_back(s.frame_id);
    bins[b].sigma_j += s.sigma;
  }

  std::vector<FrameClass> out;
  for (auto& b : bins) {
    if (b.members.size() < min_members) continue;
    b.sigma_j /= double(b.members.size());
    b.id = int(out.size());
    out.push_back(std::move(b));
  }
  if (out.empty()) throw data_error("classify: all classes underpopulated");
  return out;
}

RatioEstimate r_ratio(const SnrReport& numerator, const SnrReport& denominator,
                      const Region& region) {
  if (numerator.width != denominator.width || numerator.height != denominator.height) {
    throw data_error("r_ratio: reports have different dimensions");
  }
  if (region.width() != numerator.width || region.height() != numerator.height) {
    throw data_error("r_ratio: region does not match the reports");
  }
  std::vector<double> ratios;
  ratios.reserve(region.size());
  std::size_t excluded = 0;
  for (std::uint32_t i : region.indices()) {
    const double a = numerator.snr[i];
    const double b = denominator.snr[i];
    if (a != a || b != b || b == 0.0) {
      ++excluded;
      continue;
    }
    ratios.push_back(a / b);
  }
  if (2 * excluded > region.size()) {
    throw data_error("r_ratio: more than half of the region pixels are undefined");
  }
  const auto mv = mean_variance(ratios);
  RatioEstimate out;
  out.value = mv.mean;
  out.se = mv.n > 1 ? std::sqrt(mv.var_sample / double(mv.n)) : 0.0;
  out.n_used = ratios.size();
  out.n_excluded = excluded;
  return out;
}

double r_unity_crossing(std::span<const double> sigma, std::span<const double> r) {
  if (sigma.size() != r.size() || sigma.size() < 2) {
    throw data_error("crossing: need at least two (sigma, R) points");
  }
  // 1/R^2 is affine in sigma for ideal statistics, so interpolate there.
  std::vector<double> y(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0)) throw data_error("crossing: R values must be positive");
    y[i] = 1.0 / (r[i] * r[i]);
  }
  auto root = [&](std::size_t k) {
    const double dy = y[k + 1] - y[k];
    if (dy == 0.0) return 0.5 * (sigma[k] + sigma[k + 1]);
    return sigma[k] + (1.0 - y[k]) * (sigma[k + 1] - sigma[k]) / dy;
  };
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    if ((y[k] - 1.0) * (y[k + 1] - 1.0) <= 0.0) return root(k);
  }
  // Not bracketed: extrapolate from the segment closest to y = 1.
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    const double d = std::min(std::abs(y[k] - 1.0), std::abs(y[k + 1] - 1.0));
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return root(best);
}

}  // namespace twinsim
