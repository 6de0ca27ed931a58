#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ftcop/select.hpp"
#include "ftcop/simulate.hpp"
#include "oracles.hpp"

using namespace ftcop;

namespace {
const quadrature_rule kRule = gauss_legendre_unit(15);
}

TEST_CASE("polychoric from exact expected counts") {
  // 2x2 cells from Phi2(0,0;0.3): the plug-in maximiser recovers rho
  pair_table t;
  t.Kj = t.Kk = 2;
  const double p00 = bvn_cdf(0.0, 0.0, 0.3);
  t.counts = {p00, 0.5 - p00, 0.5 - p00, p00};
  const std::vector<double> alpha{-40.0, 0.0, 40.0};
  const auto res = polychoric_from_table(t, alpha, alpha);
  REQUIRE(res.rho == Catch::Approx(0.3).margin(1e-4));
  REQUIRE(!res.clamped);
}

TEST_CASE("polychoric on simulated discretized gaussians") {
  const int n = 20000;
  rng_stream rng(808);
  std::vector<std::vector<int>> rows;
  const double rho = 0.5;
  const auto cutz = cutpoint_set::equally_spaced(3, 5);
  for (int i = 0; i < n; ++i) {
    const double z1 = norm_quantile(rng.uniform());
    const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * norm_quantile(rng.uniform());
    const double z3 = norm_quantile(rng.uniform());
    auto cat = [&](double z) {
      int y = 0;
      while (y < 4 && norm_cdf(z) > cutz.a[0][y + 1]) ++y;
      return y;
    };
    rows.push_back({cat(z1), cat(z2), cat(z3)});
  }
  const auto data = response_matrix::from_rows(rows, 5);
  const auto cut = estimate_cutpoints(data);
  REQUIRE(polychoric(data, cut, 0, 1).rho == Catch::Approx(0.5).margin(0.02));
  REQUIRE(polychoric(data, cut, 0, 2).rho == Catch::Approx(0.0).margin(0.025));
}

TEST_CASE("partial correlation formulas") {
  REQUIRE(partial_corr(0.5, 0.6, 0.6).rho == Catch::Approx(0.21875).margin(1e-15));
  REQUIRE(partial_corr(0.36, 0.6, 0.6).rho == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(partial_corr(0.21875, 0.0, 0.0).rho == Catch::Approx(0.21875).margin(1e-15));
  const auto clamped = partial_corr(0.999, 0.9, -0.9);
  REQUIRE(clamped.clamped);
  REQUIRE(std::fabs(clamped.rho) <= 0.999);
}

TEST_CASE("minimum spanning tree selection") {
  SECTION("three-item example by inspection") {
    Eigen::MatrixXd R(3, 3);
    R << 1.0, 0.8, 0.6, 0.8, 1.0, 0.3, 0.6, 0.3, 1.0;
    Eigen::MatrixXd W(3, 3);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) W(j, k) = j == k ? 0.0 : std::log(1.0 - R(j, k) * R(j, k));
    const auto es = mst_min_weight(W);
    REQUIRE(es.edges.size() == 2);
    REQUIRE(es.edges[0] == edge(0, 1));
    REQUIRE(es.edges[1] == edge(0, 2));
  }
  SECTION("all equal weights give the lexicographically smallest star") {
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(5, 5);
    const auto es = mst_min_weight(W);
    for (int j = 0; j < 4; ++j) {
      REQUIRE(es.edges[j].a == 0);
      REQUIRE(es.edges[j].b == j + 1);
    }
  }
  SECTION("matches brute force over all spanning trees at d <= 6") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int d : {4, 5, 6}) {
      for (int rep = 0; rep < 3; ++rep) {
        Eigen::MatrixXd W(d, d);
        for (int j = 0; j < d; ++j)
          for (int k = j; k < d; ++k) {
            W(j, k) = W(k, j) = j == k ? 0.0 : unif(rng);
          }
        const auto es = mst_min_weight(W);
        double lib_weight = 0.0;
        for (const auto& e : es.edges) lib_weight += W(e.a, e.b);
        double best = 1e300;
        for (const auto& tree : oracle::all_spanning_trees(d)) {
          double w = 0.0;
          for (auto [a, b] : tree) w += W(a, b);
          best = std::min(best, w);
        }
        REQUIRE(lib_weight == Catch::Approx(best).margin(1e-12));
        REQUIRE(is_spanning_tree(es, d));
      }
    }
  }
  SECTION("invariant under positive affine weight transforms") {
    std::mt19937_64 rng(56);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int d = 6;
    Eigen::MatrixXd W(d, d);
    for (int j = 0; j < d; ++j)
      for (int k = j; k < d; ++k) W(j, k) = W(k, j) = j == k ? 0.0 : unif(rng);
    const auto base = mst_min_weight(W);
    const Eigen::MatrixXd W2 = 2.5 * W + Eigen::MatrixXd::Constant(d, d, 3.0);
    const auto scaled = mst_min_weight(W2);
    REQUIRE(base.edges.size() == scaled.edges.size());
    for (size_t e = 0; e < base.edges.size(); ++e) REQUIRE(base.edges[e] == scaled.edges[e]);
  }
  SECTION("serial path recovered from exact Markov-chain correlations") {
    const int d = 8;
    const auto taus = tau_grid(0.6, 0.3, d - 1);
    std::vector<double> rho(d - 1);
    for (int e = 0; e < d - 1; ++e) rho[e] = std::sin(pi * taus[e] / 2.0);
    Eigen::MatrixXd W(d, d);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        if (j == k) {
          W(j, k) = 0.0;
          continue;
        }
        double r = 1.0;
        for (int e = std::min(j, k); e < std::max(j, k); ++e) r *= rho[e];
        W(j, k) = std::log1p(-r * r);
      }
    const auto es = mst_min_weight(W);
    for (int e = 0; e < d - 1; ++e) {
      REQUIRE(es.edges[e].a == e);
      REQUIRE(es.edges[e].b == e + 1);
    }
  }
}

TEST_CASE("select_tree returns a valid spanning tree on weak-dependence data") {
  sim_design ds;
  ds.n = 400;
  ds.seed = 31;
  ds.cut = cutpoint_set::equally_spaced(4, 3);
  ds.spec = model_spec::factor(1, 4, copula_family::independence());
  ds.params = param_vector::zeros_like(ds.spec);
  const auto data = draw(ds);
  const auto cut = estimate_cutpoints(data);
  for (auto variant : {tree_variant::polychoric, tree_variant::partial_1f}) {
    const auto es = select_tree(data, cut, variant, kRule);
    REQUIRE(is_spanning_tree(es, 4));
    REQUIRE(es.provenance == tree_variant_name(variant));
  }
}

TEST_CASE("select_families picks gumbel for gumbel truth and keeps the incumbent rule") {
  const int d = 5;
  sim_design ds;
  ds.n = 1500;
  ds.seed = 606;
  ds.cut = cutpoint_set::equally_spaced(d, 5);
  edge_set tree;
  for (int j = 0; j + 1 < d; ++j) tree.edges.emplace_back(j, j + 1);
  ds.spec = model_spec::factor(1, d, copula_family::gumbel())
                .with_tree(tree, copula_family::gumbel());
  ds.params = param_vector::zeros_like(ds.spec);
  const auto g1 = tau_grid(0.7, 0.45, d);
  const auto ge = tau_grid(0.4, 0.2, d - 1);
  for (int j = 0; j < d; ++j) ds.params.theta1[j] = tau_to_theta(copula_family::gumbel(), g1[j]);
  for (int e = 0; e + 1 < d; ++e)
    ds.params.delta[e] = tau_to_theta(copula_family::gumbel(), ge[e]);
  const auto data = draw(ds);
  const auto cut = estimate_cutpoints(data);

  model_spec skeleton;
  skeleton.factors = 1;
  skeleton.fam1.assign(d, copula_family::bvn());
  selection_options sopt;
  sopt.threads = 2;
  const auto res =
      select_families(data, cut, skeleton, selection_candidates::defaults(), kRule, sopt);

  REQUIRE(res.steps.front().step == "factor1");
  REQUIRE(res.steps.front().winner == "gumbel");

  // the selected model never undercuts the all-BVN factor baseline
  double bvn_baseline = -1e300;
  for (const auto& [name, ll] : res.steps.front().logliks)
    if (name == "bvn") bvn_baseline = ll;
  REQUIRE(res.fit.loglik >= bvn_baseline - 1e-6);
  REQUIRE(res.tree_reports.size() == 2);
  for (const auto& rep : res.tree_reports) REQUIRE(is_spanning_tree(rep.tree, d));
}

TEST_CASE("normal scores correlation and calibration") {
  // for the BVN copula the normal-scores correlation is the parameter itself
  REQUIRE(normal_scores_corr(copula_family::bvn(), 0.35) == Catch::Approx(0.35).margin(1e-6));
  REQUIRE(normal_scores_corr(copula_family::independence(), 0.0) ==
          Catch::Approx(0.0).margin(1e-9));
  const double th = calibrate_theta_for_rho_n(copula_family::gumbel(), 0.35);
  REQUIRE(normal_scores_corr(copula_family::gumbel(), th) == Catch::Approx(0.35).margin(2e-6));
}

TEST_CASE("theoretical semi-correlations: symmetry structure") {
  const double rho_n = 0.35;
  SECTION("independence") {
    const auto [lo, up] = theoretical_semi_corr(copula_family::independence(), 0.0);
    REQUIRE(lo == Catch::Approx(0.0).margin(0.005));
    REQUIRE(up == Catch::Approx(0.0).margin(0.005));
  }
  SECTION("reflection-symmetric families have equal halves") {
    for (auto fam : {copula_family::bvn(), copula_family::frank(), copula_family::student_t(5)}) {
      const double th = calibrate_theta_for_rho_n(fam, rho_n);
      const auto [lo, up] = theoretical_semi_corr(fam, th);
      REQUIRE(lo == Catch::Approx(up).margin(0.005));
    }
  }
  SECTION("survival Gumbel swaps Gumbel's tails") {
    const double thg = calibrate_theta_for_rho_n(copula_family::gumbel(), rho_n);
    const double ths = calibrate_theta_for_rho_n(copula_family::survival_gumbel(), rho_n);
    REQUIRE(thg == Catch::Approx(ths).margin(1e-6));
    const auto [glo, gup] = theoretical_semi_corr(copula_family::gumbel(), thg);
    const auto [slo, sup] = theoretical_semi_corr(copula_family::survival_gumbel(), ths);
    REQUIRE(glo == Catch::Approx(sup).margin(0.005));
    REQUIRE(gup == Catch::Approx(slo).margin(0.005));
  }
}

TEST_CASE("observed semi-correlations find upper-tail asymmetry") {
  // Gumbel-linked items have more dependence in the joint upper tail
  const int d = 4;
  sim_design ds;
  ds.n = 4000;
  ds.seed = 909;
  ds.cut = cutpoint_set::equally_spaced(d, 5);
  ds.spec = model_spec::factor(1, d, copula_family::gumbel());
  ds.params = param_vector::zeros_like(ds.spec);
  for (int j = 0; j < d; ++j) ds.params.theta1[j] = tau_to_theta(copula_family::gumbel(), 0.55);
  const auto data = draw(ds);
  const auto cut = estimate_cutpoints(data);
  const auto res = semi_correlations(data, cut);
  REQUIRE(res.pairs == 6);
  REQUIRE(res.rho_n > 0.4);
  REQUIRE(res.rho_upper > res.rho_lower + 0.05);
}
