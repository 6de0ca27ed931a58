#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ftcop/diagnose.hpp"
#include "ftcop/simulate.hpp"

using namespace ftcop;

namespace {
const quadrature_rule kRule = gauss_legendre_unit(15);

edge_set path_tree(int d) {
  edge_set es;
  for (int j = 0; j + 1 < d; ++j) es.edges.emplace_back(j, j + 1);
  return es;
}
}  // namespace

TEST_CASE("model-implied correlations: factor products") {
  model_spec spec = model_spec::factor(1, 3, copula_family::bvn());
  param_vector par = param_vector::zeros_like(spec);
  par.theta1 = {0.6, 0.7, 0.8};
  const auto R = model_corr_matrix(spec, par);
  REQUIRE(R(0, 1) == Catch::Approx(0.42).margin(1e-15));
  REQUIRE(R(0, 2) == Catch::Approx(0.48).margin(1e-15));
  REQUIRE(R(1, 2) == Catch::Approx(0.56).margin(1e-15));
  REQUIRE(R(0, 0) == 1.0);
}

TEST_CASE("model-implied correlations: tree contributions") {
  SECTION("adjacent pair un-partials the edge parameter") {
    model_spec spec =
        model_spec::factor(1, 3, copula_family::bvn()).with_tree(path_tree(3), copula_family::bvn());
    param_vector par = param_vector::zeros_like(spec);
    par.theta1 = {0.6, 0.6, 0.0};
    par.delta = {0.5, 0.0};
    const auto R = model_corr_matrix(spec, par);
    REQUIRE(R(0, 1) == Catch::Approx(0.36 + 0.5 * 0.64).margin(1e-15));
  }
  SECTION("non-adjacent pair multiplies along the path") {
    model_spec spec;
    spec.factors = 0;
    spec.tree = path_tree(3);
    spec.fam_tree.assign(2, copula_family::bvn());
    param_vector par = param_vector::zeros_like(spec);
    par.delta = {0.5, 0.4};
    const auto R = model_corr_matrix(spec, par);
    REQUIRE(R(0, 2) == Catch::Approx(0.20).margin(1e-15));
  }
  SECTION("zero deltas collapse to the factor-only matrix") {
    model_spec spec = model_spec::factor(2, 4, copula_family::bvn());
    spec.fam2[3] = copula_family::independence();
    model_spec tree_spec = spec.with_tree(path_tree(4), copula_family::bvn());
    param_vector par = param_vector::zeros_like(spec);
    par.theta1 = {0.6, 0.5, 0.7, 0.4};
    par.theta2 = {0.3, 0.2, 0.1, 0.0};
    param_vector tree_par = param_vector::zeros_like(tree_spec);
    tree_par.theta1 = par.theta1;
    tree_par.theta2 = par.theta2;
    const auto A = model_corr_matrix(spec, par);
    const auto B = model_corr_matrix(tree_spec, tree_par);
    REQUIRE((A - B).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("monte carlo cross-check of the latent construction") {
    // z_j = t1 z0 + sqrt(1-t1^2) e_j with a Markov tree on the residuals
    model_spec spec =
        model_spec::factor(1, 3, copula_family::bvn()).with_tree(path_tree(3), copula_family::bvn());
    param_vector par = param_vector::zeros_like(spec);
    par.theta1 = {0.6, 0.5, 0.7};
    par.delta = {0.5, 0.4};
    const auto R = model_corr_matrix(spec, par);
    std::mt19937_64 rng(2121);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 400000;
    Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
    for (int i = 0; i < n; ++i) {
      const double z0 = gauss(rng);
      double e0 = gauss(rng);
      double e1 = par.delta[0] * e0 + std::sqrt(1.0 - 0.25) * gauss(rng);
      double e2 = par.delta[1] * e1 + std::sqrt(1.0 - 0.16) * gauss(rng);
      Eigen::Vector3d z;
      z[0] = par.theta1[0] * z0 + std::sqrt(1.0 - 0.36) * e0;
      z[1] = par.theta1[1] * z0 + std::sqrt(1.0 - 0.25) * e1;
      z[2] = par.theta1[2] * z0 + std::sqrt(1.0 - 0.49) * e2;
      sum += z * z.transpose();
    }
    const Eigen::Matrix3d emp = sum / n;
    for (int j = 0; j < 3; ++j)
      for (int k = j + 1; k < 3; ++k)
        REQUIRE(emp(j, k) / std::sqrt(emp(j, j) * emp(k, k)) ==
                Catch::Approx(R(j, k)).margin(0.01));
  }
  SECTION("non-BVN structures are rejected") {
    model_spec spec = model_spec::factor(1, 3, copula_family::gumbel());
    REQUIRE_THROWS_AS(model_corr_matrix(spec, param_vector::zeros_like(spec)),
                      std::domain_error);
  }
}

TEST_CASE("discrepancy measures") {
  SECTION("identical matrices give zeros") {
    Eigen::MatrixXd R(3, 3);
    R << 1.0, 0.4, 0.2, 0.4, 1.0, 0.3, 0.2, 0.3, 1.0;
    const auto res = discrepancies(R, R);
    REQUIRE(res.d1 == 0.0);
    REQUIRE(res.d2 == 0.0);
    REQUIRE(res.d3 == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("two-by-two arithmetic") {
    Eigen::MatrixXd Rm(2, 2), Ro(2, 2);
    Rm << 1.0, 0.5, 0.5, 1.0;
    Ro << 1.0, 0.3, 0.3, 1.0;
    const auto res = discrepancies(Rm, Ro);
    REQUIRE(res.d1 == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(res.d2 == Catch::Approx(0.2).margin(1e-15));
    // direct arithmetic: Rm^{-1} = (1/0.75) [[1, -0.5], [-0.5, 1]]
    const double tr = (1.0 - 0.5 * 0.3) * 2.0 / 0.75;
    const double expect = std::log(0.75) - std::log(1.0 - 0.09) + tr - 2.0;
    REQUIRE(res.d3 == Catch::Approx(expect).margin(1e-12));
  }
  SECTION("d3 is nonnegative for positive definite pairs") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd A(4, 4), B(4, 4);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          A(i, j) = gauss(rng);
          B(i, j) = gauss(rng);
        }
      Eigen::MatrixXd Rm = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(4, 4);
      Eigen::MatrixXd Ro = B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(4, 4);
      auto normalise = [](Eigen::MatrixXd& M) {
        const Eigen::VectorXd s = M.diagonal().cwiseSqrt().cwiseInverse();
        M = s.asDiagonal() * M * s.asDiagonal();
      };
      normalise(Rm);
      normalise(Ro);
      REQUIRE(discrepancies(Rm, Ro).d3 >= -1e-10);
    }
  }
  SECTION("singular model matrix is an error") {
    Eigen::MatrixXd Rm = Eigen::MatrixXd::Ones(3, 3);
    REQUIRE_THROWS_AS(discrepancies(Rm, Eigen::MatrixXd::Identity(3, 3)), std::runtime_error);
  }
}

TEST_CASE("vuong comparisons") {
  const int d = 4;
  sim_design ds;
  ds.n = 2000;
  ds.seed = 515;
  ds.cut = cutpoint_set::equally_spaced(d, 3);
  ds.spec = model_spec::factor(1, d, copula_family::gumbel());
  ds.params = param_vector::zeros_like(ds.spec);
  for (int j = 0; j < d; ++j) ds.params.theta1[j] = tau_to_theta(copula_family::gumbel(), 0.6);
  const auto data = draw(ds);

  const auto fit_true = fit_ifm(data, ds.spec, kRule);
  model_spec null_spec;
  null_spec.factors = 1;
  null_spec.fam1.assign(d, copula_family::independence());
  const auto fit_null = fit_ifm(data, null_spec, kRule);

  SECTION("identical models are indistinguishable with a zero mean") {
    const auto res = vuong(data, fit_true, fit_true, kRule);
    REQUIRE(res.dbar == 0.0);
    REQUIRE(res.s == 0.0);
    REQUIRE(res.ci_low <= 0.0);
    REQUIRE(res.ci_high >= 0.0);
    REQUIRE(res.verdict == vuong_verdict::indistinguishable);
  }
  SECTION("true model beats the independence null decisively") {
    const auto res = vuong(data, fit_null, fit_true, kRule);
    REQUIRE(res.ci_low > 0.0);
    REQUIRE(res.verdict == vuong_verdict::model2_better);
  }
  SECTION("swapping the models negates the interval") {
    const auto ab = vuong(data, fit_null, fit_true, kRule);
    const auto ba = vuong(data, fit_true, fit_null, kRule);
    REQUIRE(ab.dbar == Catch::Approx(-ba.dbar).margin(1e-12));
    REQUIRE(ab.s == Catch::Approx(ba.s).margin(1e-12));
    REQUIRE(ab.ci_low == Catch::Approx(-ba.ci_high).margin(1e-12));
    REQUIRE(ab.ci_high == Catch::Approx(-ba.ci_low).margin(1e-12));
    REQUIRE(ba.verdict == vuong_verdict::model1_better);
  }
}
