#include "twinsim/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace twinsim::theory {

namespace {

void check_point(const TheoryPoint& p) {
  if (p.alpha < 0.0 || p.alpha > 1.0) throw std::domain_error("theory: alpha outside [0, 1]");
  if (p.sigma < 0.0) throw std::domain_error("theory: sigma must be nonnegative");
  if (p.excess < -1.0) throw std::domain_error("theory: excess noise below -1");
}

}  // namespace

double noise_denominator(const TheoryPoint& p) {
  check_point(p);
  const double d = p.alpha * p.alpha * p.excess + 2.0 * p.sigma * (1.0 - p.alpha) + p.alpha;
  if (d <= 0.0) throw std::domain_error("theory: non-positive noise denominator");
  return d;
}

double sigma_from_efficiency(double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::domain_error("theory: eta outside [0, 1]");
  return 1.0 - eta;
}

double r_diff_classical(const TheoryPoint& p) {
  return std::sqrt((2.0 - p.alpha) / noise_denominator(p));
}

double r_direct_classical(const TheoryPoint& p) {
  return std::sqrt((1.0 - p.alpha) / noise_denominator(p));
}

double r_thermal(const TheoryPoint& p) {
  if (p.m_th <= 0.0) throw std::domain_error("theory: m_th must be positive");
  if (p.n_th < 0.0) throw std::domain_error("theory: n_th must be nonnegative");
  const double thermal_noise = p.alpha * p.alpha * p.n_th / p.m_th + 2.0 - p.alpha;
  return std::sqrt(thermal_noise / noise_denominator(p));
}

double excess_noise_multithermal(double n, double m) {
  if (m <= 0.0) throw std::domain_error("theory: mode number must be positive");
  if (n < 0.0) throw std::domain_error("theory: mean photon number must be nonnegative");
  return n / m;
}

double direct_classical_crossing_sigma(double alpha, double excess) {
  if (alpha < 0.0 || alpha >= 1.0) throw std::domain_error("theory: alpha outside [0, 1)");
  return (1.0 - 2.0 * alpha - alpha * alpha * excess) / (2.0 * (1.0 - alpha));
}

std::vector<CurvePoint> tabulate_r_curves(double alpha, double excess, double sigma_min,
                                          double sigma_max, std::size_t n_points) {
  if (n_points < 2) throw std::domain_error("theory: need at least 2 curve points");
  if (sigma_max <= sigma_min) throw std::domain_error("theory: empty sigma range");
  std::vector<CurvePoint> out;
  out.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double sigma =
        sigma_min + (sigma_max - sigma_min) * double(i) / double(n_points - 1);
    TheoryPoint p{alpha, sigma, excess, 0.0, 1.0};
    out.push_back({sigma, r_direct_classical(p), r_diff_classical(p)});
  }
  return out;
}

}  // namespace twinsim::theory
