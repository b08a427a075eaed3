#pragma once

#include <cstddef>
#include <vector>

namespace twinsim::theory {

/// Operating point for the closed-form SNR-ratio predictions.
///  alpha : object absorption in [0, 1]
///  sigma : degree of correlation of the twin beams
///  excess: single-beam excess noise E (>= -1; 0 for coherent light)
///  n_th, m_th: mean photon number and mode count of the thermal reference
struct TheoryPoint {
  double alpha = 0.0;
  double sigma = 0.0;
  double excess = 0.0;
  double n_th = 0.0;
  double m_th = 1.0;
};

/// Quantum-noise denominator alpha^2 E + 2 sigma (1 - alpha) + alpha shared
/// by all three ratios. Throws std::domain_error when not positive.
double noise_denominator(const TheoryPoint& p);

/// sigma = 1 - eta for balanced twin beams of channel efficiency eta.
double sigma_from_efficiency(double eta);

/// R = SNR_q / SNR_dcl = sqrt[(2 - alpha) / (alpha^2 E + 2 sigma (1 - alpha) + alpha)]
/// against the differential classical scheme (split coherent beam).
double r_diff_classical(const TheoryPoint& p);

/// R = SNR_q / SNR_cl = sqrt[(1 - alpha) / (alpha^2 E + 2 sigma (1 - alpha) + alpha)]
/// against the direct classical scheme (Poissonian source, noise-free
/// reference); exceeds 1 only below sigma = 0.5 for weak objects.
double r_direct_classical(const TheoryPoint& p);

/// R against a multithermal source whose excess noise is n_th / m_th:
/// sqrt[(alpha^2 n_th / m_th + 2 - alpha) / (alpha^2 E + 2 sigma (1 - alpha) + alpha)].
/// Reduces to r_diff_classical when n_th / m_th = 0.
double r_thermal(const TheoryPoint& p);

/// Excess noise n / m of multithermal light with mean n and m modes.
double excess_noise_multithermal(double n, double m);

/// The sigma at which r_direct_classical equals 1 for fixed alpha and E:
/// sigma* = (1 - 2 alpha - alpha^2 E) / (2 (1 - alpha)).
double direct_classical_crossing_sigma(double alpha, double excess);

struct CurvePoint {
  double sigma = 0.0;
  double r_cl = 0.0;
  double r_dcl = 0.0;
};

/// Tabulates both ratios over a uniform sigma grid, for plot overlays.
std::vector<CurvePoint> tabulate_r_curves(double alpha, double excess, double sigma_min,
                                          double sigma_max, std::size_t n_points);

}  // namespace twinsim::theory
