#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ftcop/bvn.hpp"
#include "ftcop/bvt.hpp"
#include "ftcop/normal.hpp"
#include "ftcop/student_t.hpp"

namespace ftcop {

enum class family_tag { independence, bvn, frank, gumbel, survival_gumbel, student_t };

// Bivariate copula family; dof is used by student_t only and is a fixed
// structural constant, never an optimized parameter.
struct copula_family {
  family_tag tag = family_tag::independence;
  double dof = 0.0;

  bool has_parameter() const { return tag != family_tag::independence; }

  static copula_family independence() { return {family_tag::independence, 0.0}; }
  static copula_family bvn() { return {family_tag::bvn, 0.0}; }
  static copula_family frank() { return {family_tag::frank, 0.0}; }
  static copula_family gumbel() { return {family_tag::gumbel, 0.0}; }
  static copula_family survival_gumbel() { return {family_tag::survival_gumbel, 0.0}; }
  static copula_family student_t(double nu) {
    if (!(nu > 0.0)) throw std::domain_error("student_t family: dof must be positive");
    return {family_tag::student_t, nu};
  }

  bool operator==(const copula_family& o) const { return tag == o.tag && dof == o.dof; }
};

inline std::string family_name(const copula_family& f) {
  switch (f.tag) {
    case family_tag::independence: return "independence";
    case family_tag::bvn: return "bvn";
    case family_tag::frank: return "frank";
    case family_tag::gumbel: return "gumbel";
    case family_tag::survival_gumbel: return "sgumbel";
    case family_tag::student_t: {
      const double n = f.dof;
      if (n == std::floor(n)) return "t" + std::to_string(static_cast<long>(n));
      return "t(" + std::to_string(n) + ")";
    }
  }
  return "?";
}

inline copula_family family_from_name(const std::string& name) {
  if (name == "independence" || name == "indep" || name == "ind")
    return copula_family::independence();
  if (name == "bvn" || name == "gaussian" || name == "normal") return copula_family::bvn();
  if (name == "frank") return copula_family::frank();
  if (name == "gumbel") return copula_family::gumbel();
  if (name == "sgumbel" || name == "s.gumbel" || name == "survival_gumbel")
    return copula_family::survival_gumbel();
  if (name.size() > 1 && name[0] == 't') {
    std::string arg = name.substr(1);
    if (!arg.empty() && arg.front() == '(' && arg.back() == ')')
      arg = arg.substr(1, arg.size() - 2);
    try {
      return copula_family::student_t(std::stod(arg));
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::invalid_argument("unknown copula family: " + name);
}

inline bool param_in_domain(const copula_family& f, double theta) {
  if (std::isnan(theta)) return false;
  switch (f.tag) {
    case family_tag::independence: return true;
    case family_tag::bvn:
    case family_tag::student_t: return theta > -1.0 && theta < 1.0;
    case family_tag::gumbel:
    case family_tag::survival_gumbel: return theta >= 1.0;
    case family_tag::frank: return std::isfinite(theta) && theta != 0.0;
  }
  return false;
}

inline void check_param(const copula_family& f, double theta) {
  if (!param_in_domain(f, theta))
    throw std::domain_error("copula parameter " + std::to_string(theta) +
                            " outside domain of " + family_name(f));
}

inline constexpr double unit_clamp_eps = 1e-12;

// Near-boundary clamp applied before log/quantile transforms.
inline double clamp_unit(double u) {
  return std::min(1.0 - unit_clamp_eps, std::max(unit_clamp_eps, u));
}

namespace detail {

inline void check_unit(double u, const char* what) {
  if (std::isnan(u)) throw std::invalid_argument(std::string(what) + ": NaN input");
  if (u < 0.0 || u > 1.0)
    throw std::domain_error(std::string(what) + ": argument outside [0,1]");
}

inline double gumbel_cdf(double u1, double u2, double theta) {
  if (u1 <= 0.0 || u2 <= 0.0) return 0.0;
  if (u1 >= 1.0) return u2;
  if (u2 >= 1.0) return u1;
  const double x1 = -std::log(u1), x2 = -std::log(u2);
  const double m = std::max(x1, x2);
  const double a = std::pow(x1 / m, theta) + std::pow(x2 / m, theta);
  return std::exp(-m * std::pow(a, 1.0 / theta));
}

// d/du1 of the Gumbel cdf, written with max-factoring so large theta
// cannot overflow the powers.
inline double gumbel_cond(double u2, double u1, double theta) {
  if (u2 <= 0.0) return 0.0;
  if (u2 >= 1.0) return 1.0;
  u1 = clamp_unit(u1);
  const double x1 = -std::log(u1), x2 = -std::log(u2);
  const double m = std::max(x1, x2);
  const double a = std::pow(x1 / m, theta) + std::pow(x2 / m, theta);
  const double c = std::exp(-m * std::pow(a, 1.0 / theta));
  return c * std::pow(a, 1.0 / theta - 1.0) * std::pow(x1 / m, theta - 1.0) / u1;
}

inline double frank_cdf(double u1, double u2, double theta) {
  const double num = std::expm1(-theta * u1) * std::expm1(-theta * u2);
  return -std::log1p(num / std::expm1(-theta)) / theta;
}

inline double frank_cond(double u2, double u1, double theta) {
  const double a = std::exp(-theta * u1);
  const double e2 = std::expm1(-theta * u2);
  const double den = std::expm1(-theta) + std::expm1(-theta * u1) * e2;
  return a * e2 / den;
}

inline double frank_inv_cond(double w, double u1, double theta) {
  const double a = std::exp(-theta * u1);
  const double b = std::expm1(-theta);
  const double tm1 = w * b / (a - w * (a - 1.0));
  return -std::log1p(tm1) / theta;
}

}  // namespace detail

// C(u1, u2; theta): grounded, uniform margins, nondecreasing in each argument.
inline double copula_cdf(const copula_family& f, double theta, double u1, double u2) {
  detail::check_unit(u1, "copula_cdf");
  detail::check_unit(u2, "copula_cdf");
  check_param(f, theta);
  if (u1 == 0.0 || u2 == 0.0) return 0.0;
  if (u1 == 1.0) return u2;
  if (u2 == 1.0) return u1;
  double c;
  switch (f.tag) {
    case family_tag::independence: c = u1 * u2; break;
    case family_tag::bvn:
      if (theta == 0.0) {
        c = u1 * u2;
      } else {
        c = bvn_cdf(norm_quantile(clamp_unit(u1)), norm_quantile(clamp_unit(u2)), theta);
      }
      break;
    case family_tag::frank: c = detail::frank_cdf(u1, u2, theta); break;
    case family_tag::gumbel: c = detail::gumbel_cdf(u1, u2, theta); break;
    case family_tag::survival_gumbel:
      c = u1 + u2 - 1.0 + detail::gumbel_cdf(1.0 - u1, 1.0 - u2, theta);
      break;
    case family_tag::student_t:
      c = bvt_cdf(t_quantile(clamp_unit(u1), f.dof), t_quantile(clamp_unit(u2), f.dof),
                  theta, f.dof);
      break;
    default: throw std::logic_error("copula_cdf: unhandled family");
  }
  // Frechet bounds absorb the last-ulp noise of the kernels
  return std::min(std::min(u1, u2), std::max(c, std::max(0.0, u1 + u2 - 1.0)));
}

// Conditional cdf C_{2|1}(u2 | u1) = dC(u1,u2)/du1.
inline double cond_cdf(const copula_family& f, double theta, double u2, double u1) {
  detail::check_unit(u1, "cond_cdf");
  detail::check_unit(u2, "cond_cdf");
  check_param(f, theta);
  if (u1 == 0.0 || u1 == 1.0)
    throw std::domain_error("cond_cdf: conditioning value must lie strictly inside (0,1)");
  if (u2 == 0.0) return 0.0;
  if (u2 == 1.0) return 1.0;
  double c;
  switch (f.tag) {
    case family_tag::independence: return u2;
    case family_tag::bvn: {
      const double z1 = norm_quantile(clamp_unit(u1));
      const double z2 = norm_quantile(clamp_unit(u2));
      c = norm_cdf((z2 - theta * z1) / std::sqrt(1.0 - theta * theta));
      break;
    }
    case family_tag::frank: c = detail::frank_cond(u2, u1, theta); break;
    case family_tag::gumbel: c = detail::gumbel_cond(u2, u1, theta); break;
    case family_tag::survival_gumbel:
      c = 1.0 - detail::gumbel_cond(1.0 - u2, 1.0 - u1, theta);
      break;
    case family_tag::student_t: {
      const double nu = f.dof;
      const double x1 = t_quantile(clamp_unit(u1), nu);
      const double x2 = t_quantile(clamp_unit(u2), nu);
      const double s =
          (x2 - theta * x1) * std::sqrt((nu + 1.0) / ((1.0 - theta * theta) * (nu + x1 * x1)));
      c = t_cdf(s, nu + 1.0);
      break;
    }
    default: throw std::logic_error("cond_cdf: unhandled family");
  }
  return std::min(1.0, std::max(0.0, c));
}

namespace detail {

// Safeguarded bracketing (bisection refined by secant steps) for the
// families without a closed-form conditional inverse.
template <typename F>
inline double invert_monotone(const F& g, double w, const char* what) {
  double lo = 1e-15, hi = 1.0 - 1e-15;
  double flo = g(lo) - w, fhi = g(hi) - w;
  if (flo >= 0.0) return lo;
  if (fhi <= 0.0) return hi;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = g(x) - w;
    if (std::fabs(fx) < 1e-12) return x;
    if (fx < 0.0) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    // no representable point left strictly inside the bracket: done
    if (std::nextafter(lo, hi) >= hi) return std::fabs(flo) < std::fabs(fhi) ? lo : hi;
    const double xs = lo - flo * (hi - lo) / (fhi - flo);  // secant through bracket
    const double xb = 0.5 * (lo + hi);
    x = (xs > lo && xs < hi) ? 0.5 * (xs + xb) : xb;
    if (x <= lo || x >= hi) x = xb;
  }
  throw std::runtime_error(std::string(what) +
                           ": conditional inverse did not converge (w=" + std::to_string(w) + ")");
}

}  // namespace detail

// Inverse of cond_cdf in its first argument: u2 with C_{2|1}(u2|u1) = w.
inline double inv_cond_cdf(const copula_family& f, double theta, double w, double u1) {
  detail::check_unit(w, "inv_cond_cdf");
  detail::check_unit(u1, "inv_cond_cdf");
  check_param(f, theta);
  if (u1 <= 0.0 || u1 >= 1.0)
    throw std::domain_error("inv_cond_cdf: conditioning value must lie strictly inside (0,1)");
  if (w <= 0.0) return 0.0;
  if (w >= 1.0) return 1.0;
  switch (f.tag) {
    case family_tag::independence: return w;
    case family_tag::bvn: {
      const double z1 = norm_quantile(u1);
      return norm_cdf(theta * z1 + std::sqrt(1.0 - theta * theta) * norm_quantile(w));
    }
    case family_tag::frank: {
      const double u2 = detail::frank_inv_cond(w, u1, theta);
      return std::min(1.0, std::max(0.0, u2));
    }
    case family_tag::gumbel:
      return detail::invert_monotone(
          [&](double u2) { return detail::gumbel_cond(u2, u1, theta); }, w, "gumbel");
    case family_tag::survival_gumbel:
      return 1.0 - detail::invert_monotone(
                       [&](double u2) { return detail::gumbel_cond(u2, 1.0 - u1, theta); },
                       1.0 - w, "sgumbel");
    case family_tag::student_t: {
      const double nu = f.dof;
      const double x1 = t_quantile(u1, nu);
      const double x2 = theta * x1 + t_quantile(w, nu + 1.0) *
                                         std::sqrt((1.0 - theta * theta) * (nu + x1 * x1) /
                                                   (nu + 1.0));
      return t_cdf(x2, nu);
    }
  }
  throw std::logic_error("inv_cond_cdf: unhandled family");
}

// Debye function D1(x) = (1/x) int_0^x t/(e^t - 1) dt for x > 0.
inline double debye1(double x) {
  if (!(x > 0.0)) throw std::domain_error("debye1: x must be positive");
  static const quadrature_rule gl = gauss_legendre_unit(20);
  auto integrand = [](double t) {
    return t < 1e-8 ? 1.0 - t / 2.0 + t * t / 12.0 : t / std::expm1(t);
  };
  const int panels = std::max(1, static_cast<int>(std::ceil(x / 2.0)));
  const double width = x / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * width;
    for (int q = 0; q < gl.size(); ++q)
      sum += width * gl.weights[q] * integrand(a + width * gl.nodes[q]);
  }
  return sum / x;
}

// Kendall's tau as a function of the copula parameter.
inline double theta_to_tau(const copula_family& f, double theta) {
  check_param(f, theta);
  switch (f.tag) {
    case family_tag::independence: return 0.0;
    case family_tag::bvn:
    case family_tag::student_t: return 2.0 / pi * std::asin(theta);
    case family_tag::gumbel:
    case family_tag::survival_gumbel: return 1.0 - 1.0 / theta;
    case family_tag::frank: {
      const double t = std::fabs(theta);
      const double tau = 1.0 - 4.0 / t * (1.0 - debye1(t));
      return theta > 0.0 ? tau : -tau;
    }
  }
  throw std::logic_error("theta_to_tau: unhandled family");
}

inline double tau_to_theta(const copula_family& f, double tau) {
  if (std::isnan(tau)) throw std::invalid_argument("tau_to_theta: NaN input");
  switch (f.tag) {
    case family_tag::independence:
      if (tau != 0.0) throw std::domain_error("tau_to_theta: independence requires tau = 0");
      return 0.0;
    case family_tag::bvn:
    case family_tag::student_t:
      if (!(tau > -1.0 && tau < 1.0))
        throw std::domain_error("tau_to_theta: tau outside (-1,1)");
      return std::sin(pi * tau / 2.0);
    case family_tag::gumbel:
    case family_tag::survival_gumbel:
      if (!(tau >= 0.0 && tau < 1.0))
        throw std::domain_error("tau_to_theta: Gumbel tau outside [0,1)");
      return 1.0 / (1.0 - tau);
    case family_tag::frank: {
      if (!(tau > -1.0 && tau < 1.0) || tau == 0.0)
        throw std::domain_error("tau_to_theta: Frank tau outside (-1,1)\\{0}");
      const double at = std::fabs(tau);
      double lo = 1e-8, hi = 4.0 / (1.0 - at) + 20.0;
      auto g = [&](double th) { return theta_to_tau(copula_family::frank(), th) - at; };
      while (g(hi) < 0.0) hi *= 2.0;
      double x = hi / 2.0;
      for (int it = 0; it < 200; ++it) {
        const double fx = g(x);
        if (std::fabs(fx) < 1e-14) break;
        if (fx < 0.0) lo = x; else hi = x;
        x = 0.5 * (lo + hi);
        if (hi - lo < 1e-13 * std::max(1.0, x)) break;
      }
      return tau > 0.0 ? x : -x;
    }
  }
  throw std::logic_error("tau_to_theta: unhandled family");
}

}  // namespace ftcop
