#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "ftcop/copula.hpp"
#include "oracles.hpp"

using namespace ftcop;

namespace {

const std::vector<std::pair<copula_family, double>> kParamGrid = {
    {copula_family::bvn(), -0.6},
    {copula_family::bvn(), 0.5},
    {copula_family::frank(), 5.0},
    {copula_family::frank(), -3.0},
    {copula_family::gumbel(), 1.6},
    {copula_family::gumbel(), 3.0},
    {copula_family::survival_gumbel(), 2.2},
    {copula_family::student_t(2.0), 0.45},
    {copula_family::student_t(5.0), -0.35},
};

}  // namespace

TEST_CASE("cdf values at the pinned points") {
  REQUIRE(copula_cdf(copula_family::bvn(), 0.0, 0.3, 0.7) ==
          Catch::Approx(0.21).margin(1e-12));
  // independent evaluation of the closed forms
  const double lg = std::log(0.5);
  const double gumbel_ref = std::exp(-std::sqrt(2.0 * lg * lg));
  REQUIRE(copula_cdf(copula_family::gumbel(), 2.0, 0.5, 0.5) ==
          Catch::Approx(gumbel_ref).margin(1e-12));
  REQUIRE(gumbel_ref == Catch::Approx(0.3752142272464818).margin(1e-12));
  const double th = 5.0;
  const double frank_ref =
      -std::log(1.0 + (std::exp(-th * 0.5) - 1.0) * (std::exp(-th * 0.5) - 1.0) /
                          (std::exp(-th) - 1.0)) /
      th;
  REQUIRE(copula_cdf(copula_family::frank(), th, 0.5, 0.5) ==
          Catch::Approx(frank_ref).margin(1e-12));
  REQUIRE(frank_ref == Catch::Approx(0.37715).margin(5e-6));
}

TEST_CASE("cdf boundary behaviour: grounded with uniform margins") {
  for (const auto& [fam, th] : kParamGrid) {
    for (double u : {0.0, 0.13, 0.5, 0.88, 1.0}) {
      REQUIRE(copula_cdf(fam, th, u, 0.0) == 0.0);
      REQUIRE(copula_cdf(fam, th, 0.0, u) == 0.0);
      REQUIRE(copula_cdf(fam, th, u, 1.0) == Catch::Approx(u).margin(1e-14));
      REQUIRE(copula_cdf(fam, th, 1.0, u) == Catch::Approx(u).margin(1e-14));
    }
  }
}

TEST_CASE("cdf input validation") {
  REQUIRE_THROWS_AS(copula_cdf(copula_family::bvn(), 1.5, 0.5, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(copula_cdf(copula_family::gumbel(), 0.5, 0.5, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(copula_cdf(copula_family::frank(), 0.0, 0.5, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(copula_cdf(copula_family::bvn(), 0.5, -0.1, 0.5), std::domain_error);
  REQUIRE_THROWS_AS(copula_cdf(copula_family::bvn(), 0.5, std::nan(""), 0.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(copula_family::student_t(-2.0), std::domain_error);
}

TEST_CASE("rectangle nonnegativity on random rectangles") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& [fam, th] : kParamGrid) {
    for (int i = 0; i < 1200; ++i) {
      double a1 = unif(rng), b1 = unif(rng), a2 = unif(rng), b2 = unif(rng);
      if (a1 > b1) std::swap(a1, b1);
      if (a2 > b2) std::swap(a2, b2);
      const double rect = copula_cdf(fam, th, b1, b2) - copula_cdf(fam, th, a1, b2) -
                          copula_cdf(fam, th, b1, a2) + copula_cdf(fam, th, a1, a2);
      REQUIRE(rect >= -1e-12);
    }
  }
}

TEST_CASE("reflection identity defines the survival Gumbel") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (double th : {1.0, 1.4, 2.0, 4.5}) {
    for (int i = 0; i < 400; ++i) {
      const double u1 = unif(rng), u2 = unif(rng);
      const double lhs = copula_cdf(copula_family::survival_gumbel(), th, u1, u2);
      const double rhs =
          u1 + u2 - 1.0 + copula_cdf(copula_family::gumbel(), th, 1.0 - u1, 1.0 - u2);
      REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12));
    }
  }
}

TEST_CASE("conditional cdf pinned values") {
  REQUIRE(cond_cdf(copula_family::independence(), 0.0, 0.42, 0.9) == 0.42);
  REQUIRE(cond_cdf(copula_family::bvn(), 0.5, 0.5, 0.5) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("conditional cdf equals the derivative of the cdf") {
  const double h = 1e-6;
  for (const auto& [fam, th] : kParamGrid) {
    for (double u1 : {0.3, 0.62})
      for (double u2 : {0.18, 0.7, 0.95}) {
        const double fd = (copula_cdf(fam, th, u1 + h, u2) - copula_cdf(fam, th, u1 - h, u2)) /
                          (2.0 * h);
        REQUIRE(cond_cdf(fam, th, u2, u1) == Catch::Approx(fd).margin(1e-5));
      }
  }
  // the spec's pinned Gumbel point
  const double fd = (copula_cdf(copula_family::gumbel(), 2.0, 0.3 + 1e-6, 0.7) -
                     copula_cdf(copula_family::gumbel(), 2.0, 0.3 - 1e-6, 0.7)) /
                    2e-6;
  REQUIRE(cond_cdf(copula_family::gumbel(), 2.0, 0.7, 0.3) == Catch::Approx(fd).margin(1e-5));
}

TEST_CASE("conditional cdf rejects degenerate conditioning values") {
  REQUIRE_THROWS_AS(cond_cdf(copula_family::bvn(), 0.5, 0.5, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(cond_cdf(copula_family::gumbel(), 2.0, 0.5, 1.0), std::domain_error);
}

TEST_CASE("conditional cdf integrates back to the margin") {
  for (const auto& [fam, th] : kParamGrid) {
    for (double u2 : {0.25, 0.7}) {
      const double eps = 1e-9;
      const double val = oracle::integrate(
          [&](double u1) { return cond_cdf(fam, th, u2, u1); }, eps, 1.0 - eps, 1e-8);
      REQUIRE(val == Catch::Approx(u2).margin(1e-5));
    }
  }
}

TEST_CASE("frank approaches independence as theta vanishes") {
  for (double u1 : {0.1, 0.45, 0.9})
    for (double u2 : {0.2, 0.66}) {
      REQUIRE(std::fabs(copula_cdf(copula_family::frank(), 1e-6, u1, u2) - u1 * u2) < 1e-5);
    }
}

TEST_CASE("concordance ordering in theta at the median point") {
  auto at = [](const copula_family& f, double th) { return copula_cdf(f, th, 0.5, 0.5); };
  for (double lo = -0.9; lo < 0.85; lo += 0.1)
    REQUIRE(at(copula_family::bvn(), lo) <= at(copula_family::bvn(), lo + 0.1) + 1e-15);
  for (double lo = -8.0; lo < 7.0; lo += 1.0) {
    const double a = lo == 0.0 ? 1e-9 : lo;
    const double b = lo + 1.0 == 0.0 ? 1e-9 : lo + 1.0;
    REQUIRE(at(copula_family::frank(), a) <= at(copula_family::frank(), b) + 1e-15);
  }
  for (double lo = 1.0; lo < 6.0; lo += 0.5)
    REQUIRE(at(copula_family::gumbel(), lo) <= at(copula_family::gumbel(), lo + 0.5) + 1e-15);
}

TEST_CASE("inverse conditional cdf: pinned forms and round trips") {
  REQUIRE(inv_cond_cdf(copula_family::independence(), 0.0, 0.42, 0.9) == 0.42);
  // Gaussian closed form
  for (double u1 : {0.2, 0.75})
    for (double w : {0.1, 0.5, 0.93}) {
      const double expect =
          norm_cdf(0.6 * norm_quantile(u1) + std::sqrt(1.0 - 0.36) * norm_quantile(w));
      REQUIRE(inv_cond_cdf(copula_family::bvn(), 0.6, w, u1) ==
              Catch::Approx(expect).margin(1e-12));
    }

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(1e-4, 1.0 - 1e-4);
  for (const auto& [fam, th] : kParamGrid) {
    for (int i = 0; i < 120; ++i) {
      const double u1 = unif(rng), w = unif(rng);
      const double u2 = inv_cond_cdf(fam, th, w, u1);
      REQUIRE(std::fabs(cond_cdf(fam, th, u2, u1) - w) < 1e-9);
    }
  }
}

TEST_CASE("kendall tau conversions") {
  REQUIRE(theta_to_tau(copula_family::gumbel(), 2.0) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(theta_to_tau(copula_family::bvn(), 0.5) ==
          Catch::Approx(1.0 / 3.0).margin(1e-14));

  // Frank tau via an independent Debye-1 evaluation
  const double d1 = oracle::integrate(
                        [](double t) { return t < 1e-8 ? 1.0 - t / 2.0 : t / std::expm1(t); },
                        0.0, 5.0, 1e-12) /
                    5.0;
  const double tau_ref = 1.0 - 4.0 / 5.0 * (1.0 - d1);
  REQUIRE(theta_to_tau(copula_family::frank(), 5.0) == Catch::Approx(tau_ref).margin(1e-10));
  REQUIRE(tau_ref == Catch::Approx(0.4567).margin(5e-5));

  // mutual inverses
  for (double tau : {-0.8, -0.3, 0.05, 0.4, 0.85}) {
    for (auto fam : {copula_family::bvn(), copula_family::student_t(2.0)}) {
      REQUIRE(theta_to_tau(fam, tau_to_theta(fam, tau)) ==
              Catch::Approx(tau).margin(1e-12));
    }
    if (tau != 0.0)
      REQUIRE(theta_to_tau(copula_family::frank(), tau_to_theta(copula_family::frank(), tau)) ==
              Catch::Approx(tau).margin(1e-10));
    if (tau > 0.0) {
      REQUIRE(theta_to_tau(copula_family::gumbel(), tau_to_theta(copula_family::gumbel(), tau)) ==
              Catch::Approx(tau).margin(1e-12));
      REQUIRE(tau_to_theta(copula_family::survival_gumbel(), tau) ==
              tau_to_theta(copula_family::gumbel(), tau));
    }
  }
  REQUIRE_THROWS_AS(tau_to_theta(copula_family::gumbel(), -0.2), std::domain_error);
  REQUIRE_THROWS_AS(tau_to_theta(copula_family::frank(), 0.0), std::domain_error);
}

TEST_CASE("family names round trip") {
  for (const auto& [fam, th] : kParamGrid)
    REQUIRE(family_from_name(family_name(fam)) == fam);
  REQUIRE(family_from_name("t2").dof == 2.0);
  REQUIRE(family_from_name("s.gumbel").tag == family_tag::survival_gumbel);
  REQUIRE_THROWS_AS(family_from_name("clayton"), std::invalid_argument);
}
