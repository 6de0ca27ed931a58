#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ftcop/normal.hpp"
#include "ftcop/quadrature.hpp"

using namespace ftcop;

TEST_CASE("two point rule on the unit interval") {
  const auto rule = gauss_legendre_unit(2);
  REQUIRE(rule.nodes[0] == Catch::Approx(0.5 - 0.5 / std::sqrt(3.0)).margin(1e-15));
  REQUIRE(rule.nodes[1] == Catch::Approx(0.5 + 0.5 / std::sqrt(3.0)).margin(1e-15));
  REQUIRE(rule.weights[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(rule.weights[1] == Catch::Approx(0.5).margin(1e-15));

  // degree-3 exactness: int_0^1 x^3 dx = 1/4
  double s = 0.0;
  for (int q = 0; q < 2; ++q) s += rule.weights[q] * std::pow(rule.nodes[q], 3);
  REQUIRE(s == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("polynomial exactness up to degree 2n-1") {
  for (int nq : {3, 7, 15}) {
    const auto rule = gauss_legendre_unit(nq);
    for (int deg = 0; deg <= 2 * nq - 1; ++deg) {
      double s = 0.0;
      for (int q = 0; q < nq; ++q) s += rule.weights[q] * std::pow(rule.nodes[q], deg);
      REQUIRE(s == Catch::Approx(1.0 / (deg + 1)).margin(1e-13));
    }
  }
}

TEST_CASE("second moment of the standard normal via 15 nodes") {
  // the integrand has endpoint singularities, so the rule converges at
  // O(n^-2) here rather than spectrally; 15 nodes land within 1e-2
  auto moment = [](int nq) {
    const auto rule = gauss_legendre_unit(nq);
    double s = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const double z = norm_quantile(rule.nodes[q]);
      s += rule.weights[q] * z * z;
    }
    return s;
  };
  REQUIRE(moment(15) == Catch::Approx(1.0).margin(1e-2));
  REQUIRE(std::fabs(moment(50) - 1.0) < std::fabs(moment(15) - 1.0));
  REQUIRE(std::fabs(moment(50) - 1.0) < 1e-3);
}

TEST_CASE("rule symmetry and normalisation") {
  for (int nq : {2, 5, 15, 35}) {
    const auto rule = gauss_legendre_unit(nq);
    double wsum = 0.0;
    for (int q = 0; q < nq; ++q) {
      REQUIRE(rule.nodes[q] + rule.nodes[nq - 1 - q] == Catch::Approx(1.0).margin(1e-14));
      REQUIRE(rule.weights[q] == Catch::Approx(rule.weights[nq - 1 - q]).margin(1e-14));
      REQUIRE(rule.nodes[q] > 0.0);
      REQUIRE(rule.nodes[q] < 1.0);
      if (q > 0) REQUIRE(rule.nodes[q] > rule.nodes[q - 1]);
      wsum += rule.weights[q];
    }
    REQUIRE(wsum == Catch::Approx(1.0).margin(1e-14));
  }
}

TEST_CASE("identical rules across calls") {
  const auto a = gauss_legendre_unit(15);
  const auto b = gauss_legendre_unit(15);
  for (int q = 0; q < 15; ++q) {
    REQUIRE(a.nodes[q] == b.nodes[q]);
    REQUIRE(a.weights[q] == b.weights[q]);
  }
}

TEST_CASE("degenerate sizes rejected") {
  REQUIRE_THROWS_AS(gauss_legendre_unit(1), std::domain_error);
  REQUIRE_THROWS_AS(gauss_legendre_unit(0), std::domain_error);
}
