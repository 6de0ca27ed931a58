#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ftcop/estimate.hpp"
#include "ftcop/likelihood.hpp"
#include "ftcop/polychoric.hpp"

namespace ftcop {

inline Eigen::MatrixXd polychoric_matrix(const response_matrix& data, const cutpoint_set& cut) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(data.d, data.d);
  for (int j = 0; j < data.d; ++j)
    for (int k = j + 1; k < data.d; ++k)
      R(j, k) = R(k, j) = polychoric(data, cut, j, k).rho;
  return R;
}

// Correlation matrix implied by an all-BVN factor tree model. Factor parts
// use the normal-ogive products; the residual-tree partial correlation of a
// non-adjacent pair is the product of the edge parameters along the unique
// tree path (Gaussian conditional independence on trees), then un-partialled
// through the factor levels.
inline Eigen::MatrixXd model_corr_matrix(const model_spec& spec, const param_vector& par) {
  if (!all_bvn_or_independence(spec))
    throw std::domain_error(
        "model_corr_matrix: implied correlation matrix is defined for BVN structures only");
  const int d = spec.factors >= 1 ? static_cast<int>(spec.fam1.size())
                                  : (spec.tree ? spec.tree->size() + 1 : 0);
  std::vector<std::vector<int>> path_edges;  // cached path lookup per pair
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      const double t1j = spec.factors >= 1 && spec.fam1[j].has_parameter() ? par.theta1[j] : 0.0;
      const double t1k = spec.factors >= 1 && spec.fam1[k].has_parameter() ? par.theta1[k] : 0.0;
      const double t2j = spec.factors == 2 && spec.fam2[j].has_parameter() ? par.theta2[j] : 0.0;
      const double t2k = spec.factors == 2 && spec.fam2[k].has_parameter() ? par.theta2[k] : 0.0;
      double rho_resid = 0.0;
      if (spec.tree) {
        rho_resid = 1.0;
        for (const auto& e : tree_path(*spec.tree, d, j, k)) {
          auto it = std::find(spec.tree->edges.begin(), spec.tree->edges.end(), e);
          const auto idx = static_cast<size_t>(it - spec.tree->edges.begin());
          rho_resid *= spec.fam_tree[idx].has_parameter() ? par.delta[idx] : 0.0;
        }
      }
      double r = t1j * t1k;
      r += t2j * t2k * std::sqrt((1.0 - t1j * t1j) * (1.0 - t1k * t1k));
      r += rho_resid * std::sqrt((1.0 - t1j * t1j) * (1.0 - t1k * t1k) * (1.0 - t2j * t2j) *
                                 (1.0 - t2k * t2k));
      R(j, k) = R(k, j) = r;
    }
  return R;
}

struct discrepancy_result {
  double d1 = 0.0;  // max absolute off-diagonal difference
  double d2 = 0.0;  // average absolute off-diagonal difference (unordered pairs)
  double d3 = 0.0;  // log det(Rm) - log det(Ro) + tr(Rm^-1 Ro) - d
};

inline discrepancy_result discrepancies(const Eigen::MatrixXd& r_model,
                                        const Eigen::MatrixXd& r_observed) {
  const int d = static_cast<int>(r_model.rows());
  if (r_observed.rows() != d || r_model.cols() != d || r_observed.cols() != d)
    throw std::domain_error("discrepancies: dimension mismatch");
  discrepancy_result out;
  double sum = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      const double diff = std::fabs(r_model(j, k) - r_observed(j, k));
      out.d1 = std::max(out.d1, diff);
      sum += diff;
    }
  out.d2 = sum / (d * (d - 1) / 2.0);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(r_model);
  const double det_m = lu.determinant();
  const double det_o = r_observed.determinant();
  if (!(det_m > 1e-300)) throw std::runtime_error("discrepancies: model matrix is singular");
  out.d3 = std::log(det_m) - std::log(det_o) + (lu.solve(r_observed)).trace() - d;
  return out;
}

enum class vuong_verdict { model1_better, model2_better, indistinguishable };

struct vuong_result {
  double dbar = 0.0;     // mean log ratio log pi2 / pi1
  double s = 0.0;        // sample standard deviation of the log ratios
  double ci_low = 0.0;   // AIC-adjusted 95% interval
  double ci_high = 0.0;
  int dim1 = 0, dim2 = 0;
  vuong_verdict verdict = vuong_verdict::indistinguishable;
  bool floored_pmf = false;  // a clamped pmf floor entered a log ratio
};

// Vuong comparison of two models fitted to the same data, with the AIC
// dimension adjustment of the displayed interval.
inline vuong_result vuong(const response_matrix& data, const fit_result& fit1,
                          const fit_result& fit2, const quadrature_rule& rule) {
  const row_table rows = row_table::aggregate(data);
  const pmf_evaluator ev1(fit1.cut, fit1.spec, fit1.params, rule);
  const pmf_evaluator ev2(fit2.cut, fit2.spec, fit2.params, rule);
  const int n = data.n;
  vuong_result out;
  out.dim1 = fit1.n_params;
  out.dim2 = fit2.n_params;
  double sum = 0.0, sumsq = 0.0;
  for (size_t r = 0; r < rows.rows.size(); ++r) {
    const double p1 = ev1.pmf(rows.rows[r]);
    const double p2 = ev2.pmf(rows.rows[r]);
    if (p1 <= pmf_floor || p2 <= pmf_floor) out.floored_pmf = true;
    const double di = std::log(p2) - std::log(p1);
    sum += rows.counts[r] * di;
    sumsq += rows.counts[r] * di * di;
  }
  out.dbar = sum / n;
  const double var = (sumsq - n * out.dbar * out.dbar) / (n - 1);
  out.s = std::sqrt(std::max(var, 0.0));
  const double centre = out.dbar - (out.dim2 - out.dim1) / static_cast<double>(n);
  const double half = 1.96 * out.s / std::sqrt(static_cast<double>(n));
  out.ci_low = centre - half;
  out.ci_high = centre + half;
  if (out.ci_low > 0.0) out.verdict = vuong_verdict::model2_better;
  else if (out.ci_high < 0.0) out.verdict = vuong_verdict::model1_better;
  else out.verdict = vuong_verdict::indistinguishable;
  return out;
}

}  // namespace ftcop
