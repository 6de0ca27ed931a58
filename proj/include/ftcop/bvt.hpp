#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "ftcop/bvn.hpp"
#include "ftcop/student_t.hpp"

namespace ftcop {

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb, double whole,
                                   double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// P(T1 <= h | T2 ... ) building block: conditional cdf of the second
// coordinate of a standardized bivariate t given the first equals t.
inline double bvt_conditional(double t, double k, double r, double nu) {
  const double s = (k - r * t) * std::sqrt((nu + 1.0) / ((nu + t * t) * (1.0 - r * r)));
  return t_cdf(s, nu + 1.0);
}

// General-nu bivariate t cdf by integrating the exact conditional over the
// first coordinate on the probability scale.
inline double bvt_cdf_integrate(double h, double k, double r, double nu) {
  const double uh = t_cdf(h, nu);
  if (uh <= 0.0) return 0.0;
  auto f = [&](double u) {
    const double ue = std::min(std::max(u, 1e-300), 1.0 - 1e-16);
    return bvt_conditional(t_quantile(ue, nu), k, r, nu);
  };
  return adaptive_simpson(f, 0.0, uh, 1e-9);
}

inline double sign1(double x) { return x >= 0.0 ? 1.0 : -1.0; }

// Closed-form bivariate t cdf for integer degrees of freedom
// (Dunnett-Sobel series in the arrangement of Genz's TVPACK BVTL).
inline double bvt_cdf_int(double h, double k, double r, int nu) {
  constexpr double eps = 1e-15;
  if (1.0 - r <= eps) return t_cdf(std::min(h, k), nu);
  if (r + 1.0 <= eps) return h > -k ? t_cdf(h, nu) - t_cdf(-k, nu) : 0.0;

  const double tpi = 2.0 * pi;
  const double snu = std::sqrt(static_cast<double>(nu));
  const double ors = 1.0 - r * r;
  const double hrk = h - r * k;
  const double krh = k - r * h;
  double xnhk = 0.0, xnkh = 0.0;
  if (std::fabs(hrk) + ors > 0.0) {
    xnhk = hrk * hrk / (hrk * hrk + ors * (nu + k * k));
    xnkh = krh * krh / (krh * krh + ors * (nu + h * h));
  }
  const double hs = sign1(hrk);
  const double ks = sign1(krh);
  double bvt;
  if (nu % 2 == 0) {
    bvt = std::atan2(std::sqrt(ors), -r) / tpi;
    double gmph = h / std::sqrt(16.0 * (nu + h * h));
    double gmpk = k / std::sqrt(16.0 * (nu + k * k));
    double btnckh = 2.0 * std::atan2(std::sqrt(xnkh), std::sqrt(1.0 - xnkh)) / pi;
    double btpdkh = 2.0 * std::sqrt(xnkh * (1.0 - xnkh)) / pi;
    double btnchk = 2.0 * std::atan2(std::sqrt(xnhk), std::sqrt(1.0 - xnhk)) / pi;
    double btpdhk = 2.0 * std::sqrt(xnhk * (1.0 - xnhk)) / pi;
    for (int j = 1; j <= nu / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btnckh += btpdkh;
      btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
      btnchk += btpdhk;
      btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
      gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + h * h / nu));
      gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + k * k / nu));
    }
  } else {
    const double qhrk = std::sqrt(h * h + k * k - 2.0 * r * h * k + nu * ors);
    const double hkrn = h * k + r * nu;
    const double hkn = h * k - nu;
    const double hpk = h + k;
    bvt = std::atan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - nu * hpk * qhrk) / tpi;
    if (bvt < -eps) bvt += 1.0;
    double gmph = h / (tpi * snu * (1.0 + h * h / nu));
    double gmpk = k / (tpi * snu * (1.0 + k * k / nu));
    double btnckh = std::sqrt(xnkh);
    double btpdkh = btnckh;
    double btnchk = std::sqrt(xnhk);
    double btpdhk = btnchk;
    for (int j = 1; j <= (nu - 1) / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
      btnckh += btpdkh;
      btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
      btnchk += btpdhk;
      gmph = gmph * 2.0 * j / ((2.0 * j + 1.0) * (1.0 + h * h / nu));
      gmpk = gmpk * 2.0 * j / ((2.0 * j + 1.0) * (1.0 + k * k / nu));
    }
  }
  return std::min(1.0, std::max(0.0, bvt));
}

}  // namespace detail

// Bivariate Student-t cdf P(T1 <= z1, T2 <= z2), correlation rho, nu > 0.
// Integer nu uses the closed-form series; otherwise the exact conditional
// is integrated numerically over the first coordinate.
inline double bvt_cdf(double z1, double z2, double rho, double nu) {
  if (std::isnan(z1) || std::isnan(z2) || std::isnan(rho))
    throw std::domain_error("bvt_cdf: NaN input");
  if (!(rho > -1.0 && rho < 1.0)) throw std::domain_error("bvt_cdf: rho outside (-1,1)");
  if (nu <= 0.0) throw std::domain_error("bvt_cdf: nu must be positive");
  if (std::isinf(z1) || std::isinf(z2)) {
    if (z1 == -std::numeric_limits<double>::infinity() ||
        z2 == -std::numeric_limits<double>::infinity())
      return 0.0;
    if (std::isinf(z1)) return t_cdf(z2, nu);
    return t_cdf(z1, nu);
  }
  if (detail::is_small_integer(nu))
    return detail::bvt_cdf_int(z1, z2, rho, static_cast<int>(nu));
  return std::min(1.0, std::max(0.0, detail::bvt_cdf_integrate(z1, z2, rho, nu)));
}

}  // namespace ftcop
