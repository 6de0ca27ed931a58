#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "ftcop/normal.hpp"

namespace ftcop {

namespace detail {

inline bool is_small_integer(double nu) {
  return nu == std::floor(nu) && nu >= 1.0 && nu <= 200.0;
}

// Closed-form cdf for integer degrees of freedom (A&S 26.7.3/26.7.4).
inline double t_cdf_int(double x, int nu) {
  const double a = x / std::sqrt(static_cast<double>(nu));
  const double b = nu / (nu + x * x);
  if (nu % 2 == 1) {
    double sum = 0.0;
    if (nu >= 3) {
      double c = 1.0, bj = 1.0;
      for (int j = 0; j <= (nu - 3) / 2; ++j) {
        if (j > 0) {
          c *= (2.0 * j) / (2.0 * j + 1.0);
          bj *= b;
        }
        sum += c * bj;
      }
      sum *= a * b;
    }
    return 0.5 + (std::atan(a) + sum) / pi;
  }
  double c = 1.0, bj = 1.0, sum = 0.0;
  for (int j = 0; j <= nu / 2 - 1; ++j) {
    if (j > 0) {
      c *= (2.0 * j - 1.0) / (2.0 * j);
      bj *= b;
    }
    sum += c * bj;
  }
  return 0.5 + 0.5 * a * std::sqrt(b) * sum;
}

}  // namespace detail

inline double t_pdf(double x, double nu) {
  using boost::math::students_t_distribution;
  if (nu <= 0.0) throw std::domain_error("t_pdf: nu must be positive");
  // lgamma form avoids the boost object for the common small-nu calls
  const double lg =
      std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * std::log(nu * pi);
  return std::exp(lg - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

inline double t_cdf(double x, double nu) {
  if (nu <= 0.0) throw std::domain_error("t_cdf: nu must be positive");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  if (detail::is_small_integer(nu))
    return std::min(1.0, std::max(0.0, detail::t_cdf_int(x, static_cast<int>(nu))));
  boost::math::students_t_distribution<double> dist(nu);
  return boost::math::cdf(dist, x);
}

inline double t_quantile(double p, double nu) {
  if (nu <= 0.0) throw std::domain_error("t_quantile: nu must be positive");
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw std::domain_error("t_quantile: p outside [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (nu == 1.0) return std::tan(pi * (p - 0.5));
  if (nu == 2.0) {
    const double s = 2.0 * p - 1.0;
    return s * std::sqrt(2.0 / (4.0 * p * (1.0 - p)));
  }
  boost::math::students_t_distribution<double> dist(nu);
  return boost::math::quantile(dist, p);
}

}  // namespace ftcop
