#pragma once

// Shared test utilities: pooled sample moments, analytic moment oracles for
// the negative-binomial (Gamma-Poisson) family, and scratch directories.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "twinsim/frame.hpp"

namespace test_util {

struct Pooled {
  double mean = 0.0;
  double var = 0.0;  // sample variance (n-1)
  std::size_t n = 0;
};

template <class T>
Pooled pooled_moments(const twinsim::FrameStackT<T>& stack) {
  Pooled p;
  double sum = 0.0;
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    for (T v : stack.frame(f)) {
      sum += double(v);
      ++p.n;
    }
  }
  p.mean = sum / double(p.n);
  double sq = 0.0;
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    for (T v : stack.frame(f)) {
      const double d = double(v) - p.mean;
      sq += d * d;
    }
  }
  p.var = sq / double(p.n - 1);
  return p;
}

inline double se_of_mean(double variance, std::size_t n) {
  return std::sqrt(variance / double(n));
}

/// Standard error of the sample variance of an i.i.d. sample with the given
/// variance and excess kurtosis: var * sqrt(kurt/n + 2/(n-1)).
inline double se_of_var(double variance, double kurt_excess, std::size_t n) {
  return variance * std::sqrt(kurt_excess / double(n) + 2.0 / double(n - 1));
}

/// Excess kurtosis of the negative binomial with mean n0 and shape M.
inline double kurt_nb(double n0, double modes) {
  const double p = modes / (modes + n0);
  const double q = 1.0 - p;
  return 6.0 / modes + p * p / (modes * q);
}

inline double kurt_poisson(double lambda) { return 1.0 / lambda; }

/// Unique scratch directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("twinsim_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test_util
