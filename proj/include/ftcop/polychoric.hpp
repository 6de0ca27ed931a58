#pragma once

#include <cmath>
#include <vector>

#include "ftcop/bvn.hpp"
#include "ftcop/data.hpp"
#include "ftcop/solve.hpp"

namespace ftcop {

// Cross-tabulation of a pair of items. Counts are doubles so that expected
// (fractional) tables can be fitted directly.
struct pair_table {
  std::vector<double> counts;  // Kj x Kk row-major
  int Kj = 0, Kk = 0;

  double& at(int yj, int yk) { return counts[static_cast<size_t>(yj) * Kk + yk]; }
  double at(int yj, int yk) const { return counts[static_cast<size_t>(yj) * Kk + yk]; }
};

inline pair_table cross_tab(const response_matrix& data, int j, int k) {
  pair_table t;
  t.Kj = data.category_counts[j];
  t.Kk = data.category_counts[k];
  t.counts.assign(static_cast<size_t>(t.Kj) * t.Kk, 0.0);
  for (int i = 0; i < data.n; ++i) t.at(data.y(i, j), data.y(i, k)) += 1.0;
  return t;
}

struct polychoric_result {
  double rho = 0.0;
  bool clamped = false;  // |rho_hat| ran into the 0.999 guard
};

// Maximiser of the bivariate-normal rectangle log-likelihood over rho.
inline polychoric_result polychoric_from_table(const pair_table& table,
                                               const std::vector<double>& alpha_j,
                                               const std::vector<double>& alpha_k) {
  const int Kj = table.Kj, Kk = table.Kk;
  auto negll = [&](double rho) {
    std::vector<double> corner((Kj + 1) * (Kk + 1));
    for (int a = 0; a <= Kj; ++a)
      for (int b = 0; b <= Kk; ++b) {
        const double za = a == 0 ? -40.0 : (a == Kj ? 40.0 : alpha_j[a]);
        const double zb = b == 0 ? -40.0 : (b == Kk ? 40.0 : alpha_k[b]);
        corner[a * (Kk + 1) + b] = bvn_cdf(za, zb, rho);
      }
    double ll = 0.0;
    for (int a = 0; a < Kj; ++a)
      for (int b = 0; b < Kk; ++b) {
        const double c = table.at(a, b);
        if (c == 0.0) continue;
        const int s = Kk + 1;
        const double rect = corner[(a + 1) * s + b + 1] - corner[a * s + b + 1] -
                            corner[(a + 1) * s + b] + corner[a * s + b];
        ll += c * std::log(std::max(rect, 1e-300));
      }
    return -ll;
  };
  const double bound = 0.999;
  polychoric_result out;
  out.rho = brent_minimize(negll, -bound, bound, 1e-9);
  if (std::fabs(out.rho) >= bound - 1e-6) {
    out.rho = out.rho > 0 ? bound : -bound;
    out.clamped = true;
  }
  return out;
}

inline polychoric_result polychoric(const response_matrix& data, const cutpoint_set& cut,
                                    int j, int k) {
  return polychoric_from_table(cross_tab(data, j, k), cut.alpha[j], cut.alpha[k]);
}

// Partial correlation of two items' latent normals after removing one
// factor level; exact display formula.
struct partial_corr_result {
  double rho = 0.0;
  bool clamped = false;
};

inline partial_corr_result partial_corr(double rho_jk, double t_j, double t_k) {
  const double num = rho_jk - t_j * t_k;
  const double den = std::sqrt((1.0 - t_j * t_j) * (1.0 - t_k * t_k));
  partial_corr_result out;
  out.rho = num / den;
  if (!(out.rho > -1.0 && out.rho < 1.0)) {
    out.rho = out.rho >= 1.0 ? 0.999 : -0.999;
    out.clamped = true;
  }
  return out;
}

}  // namespace ftcop
