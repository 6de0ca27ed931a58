#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ftcop/normal.hpp"
#include "ftcop/quadrature.hpp"

namespace ftcop {

namespace detail {

// Half of a symmetric Gauss-Legendre rule on (-1,1): |nodes| and weights.
struct gl_half {
  std::vector<double> x, w;
  explicit gl_half(int n) {
    std::vector<double> xf, wf;
    gauss_legendre_pm1(n, xf, wf);
    for (int i = 0; i < n / 2; ++i) {
      x.push_back(std::fabs(xf[i]));
      w.push_back(wf[i]);
    }
  }
};

inline const gl_half& gl_half_rule(int idx) {
  static const gl_half r6(6), r12(12), r20(20);
  switch (idx) {
    case 0: return r6;
    case 1: return r12;
    default: return r20;
  }
}

// Upper-orthant probability P(X > h, Y > k) for standard bivariate normal
// with correlation r. Hybrid scheme of Drezner-Wesolowsky as refined by
// Genz (2004): Gauss-Legendre on the arcsine-transformed integral for
// moderate |r|, and on a singularity-subtracted form for |r| near 1.
// Absolute accuracy around 5e-16.
inline double bvn_upper(double h, double k, double r) {
  const double twopi = 2.0 * pi;
  int ng;
  if (std::fabs(r) < 0.3) ng = 0;
  else if (std::fabs(r) < 0.75) ng = 1;
  else ng = 2;
  const auto& rule = gl_half_rule(ng);
  const int lg = static_cast<int>(rule.x.size());

  double hk = h * k;
  double bvn = 0.0;
  if (std::fabs(r) < 0.925) {
    if (std::fabs(r) > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * rule.x[i] + 1.0) / 2.0);
          bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn *= asr / (2.0 * twopi);
    }
    bvn += norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::fabs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * norm_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double xs = a * (is * rule.x[i] + 1.0) * a * (is * rule.x[i] + 1.0);
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            bvn += a * rule.w[i] * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
          }
        }
      }
      bvn = -bvn / twopi;
    }
    if (r > 0.0) {
      bvn += norm_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
    }
  }
  return std::min(1.0, std::max(0.0, bvn));
}

}  // namespace detail

// Bivariate standard normal cdf P(Z1 <= z1, Z2 <= z2) with correlation rho.
inline double bvn_cdf(double z1, double z2, double rho) {
  if (std::isnan(z1) || std::isnan(z2) || std::isnan(rho))
    throw std::domain_error("bvn_cdf: NaN input");
  if (!(rho > -1.0 && rho < 1.0)) {
    if (rho == 1.0) return norm_cdf(std::min(z1, z2));
    if (rho == -1.0) return std::max(0.0, norm_cdf(z1) - norm_cdf(-z2));
    throw std::domain_error("bvn_cdf: rho outside (-1,1)");
  }
  if (std::isinf(z1) || std::isinf(z2)) {
    if (z1 == -std::numeric_limits<double>::infinity() ||
        z2 == -std::numeric_limits<double>::infinity())
      return 0.0;
    if (std::isinf(z1)) return norm_cdf(z2);
    return norm_cdf(z1);
  }
  return detail::bvn_upper(-z1, -z2, rho);
}

}  // namespace ftcop
