#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ftcop {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;
inline constexpr double inv_sqrt2 = 0.70710678118654752440;

inline double norm_pdf(double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

// Standard normal cdf through erfc; accurate in both tails.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * inv_sqrt2); }

// Inverse standard normal cdf: Abramowitz-Stegun 26.2.22 initial value
// (|err| < 4.5e-4) polished by three Newton steps on norm_cdf.
inline double norm_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw std::domain_error("norm_quantile: p outside [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();

  const double q = p < 0.5 ? p : 1.0 - p;
  const double t = std::sqrt(-2.0 * std::log(q));
  double z = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
  if (p < 0.5) z = -z;
  for (int it = 0; it < 3; ++it) {
    const double d = norm_pdf(z);
    if (d <= 0.0) break;
    z -= (norm_cdf(z) - p) / d;
  }
  return z;
}

}  // namespace ftcop
