#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ftcop/normal.hpp"

namespace ftcop {

// Gauss-Legendre nodes/weights on (-1,1), Newton iteration on P_n.
inline void gauss_legendre_pm1(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

// Quadrature rule transformed to the unit interval; weights sum to 1.
struct quadrature_rule {
  std::vector<double> nodes;    // strictly increasing in (0,1)
  std::vector<double> weights;  // positive

  int size() const { return static_cast<int>(nodes.size()); }
};

inline quadrature_rule gauss_legendre_unit(int nq) {
  if (nq < 2) throw std::domain_error("gauss_legendre_unit: nq must be >= 2");
  std::vector<double> x, w;
  gauss_legendre_pm1(nq, x, w);
  quadrature_rule rule;
  rule.nodes.resize(nq);
  rule.weights.resize(nq);
  double wsum = 0.0;
  for (int q = 0; q < nq; ++q) {
    rule.nodes[q] = 0.5 * (1.0 + x[q]);
    rule.weights[q] = 0.5 * w[q];
    wsum += rule.weights[q];
  }
  for (double& wq : rule.weights) wq /= wsum;
  return rule;
}

inline constexpr int default_nq = 15;

}  // namespace ftcop
