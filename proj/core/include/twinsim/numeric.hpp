#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace twinsim {

/// Neumaier compensated summation. Keeps long reductions reproducible to
/// better than 1e-12 relative regardless of magnitude spread.
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanVar {
  double mean = 0.0;
  double var_pop = 0.0;     // divides by n
  double var_sample = 0.0;  // divides by n-1, zero when n < 2
  std::size_t n = 0;
};

/// Two-pass compensated mean and variance.
template <class It, class Get>
MeanVar mean_variance(It first, It last, Get get) {
  MeanVar out;
  NeumaierSum s;
  std::size_t n = 0;
  for (It it = first; it != last; ++it, ++n) s.add(get(*it));
  out.n = n;
  if (n == 0) return out;
  out.mean = s.value() / double(n);
  NeumaierSum sq;
  for (It it = first; it != last; ++it) {
    const double d = get(*it) - out.mean;
    sq.add(d * d);
  }
  out.var_pop = sq.value() / double(n);
  out.var_sample = n > 1 ? sq.value() / double(n - 1) : 0.0;
  return out;
}

inline MeanVar mean_variance(std::span<const double> values) {
  return mean_variance(values.begin(), values.end(), [](double v) { return v; });
}

inline double mean(std::span<const double> values) {
  NeumaierSum s;
  for (double v : values) s.add(v);
  return values.empty() ? 0.0 : s.value() / double(values.size());
}

}  // namespace twinsim
