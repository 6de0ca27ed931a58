#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ftcop/likelihood.hpp"
#include "ftcop/optimize.hpp"
#include "ftcop/polychoric.hpp"

namespace ftcop {

// Frank's excluded point theta = 0 is handled by a small exclusion zone on
// the unconstrained scale; the likelihood is continuous through 0.
inline constexpr double frank_exclusion = 1e-5;

inline double to_unconstrained(const copula_family& f, double theta) {
  switch (f.tag) {
    case family_tag::bvn:
    case family_tag::student_t: return std::atanh(theta);
    case family_tag::gumbel:
    case family_tag::survival_gumbel: return std::log(theta - 1.0);
    case family_tag::frank: return theta;
    default: throw std::logic_error("to_unconstrained: family has no parameter");
  }
}

inline double from_unconstrained(const copula_family& f, double gamma) {
  switch (f.tag) {
    case family_tag::bvn:
    case family_tag::student_t: {
      // keep strictly inside (-1,1): tanh rounds to +-1 beyond |gamma|~19
      const double t = std::tanh(gamma);
      return std::min(1.0 - 1e-12, std::max(-1.0 + 1e-12, t));
    }
    case family_tag::gumbel:
    case family_tag::survival_gumbel: return 1.0 + std::exp(std::min(gamma, 690.0));
    case family_tag::frank:
      if (std::fabs(gamma) < frank_exclusion)
        return gamma >= 0.0 ? frank_exclusion : -frank_exclusion;
      return gamma;
    default: throw std::logic_error("from_unconstrained: family has no parameter");
  }
}

// Flat packing of the parametric links: factor-1 block, factor-2 block,
// tree block, independence links skipped.
struct param_layout {
  struct entry {
    int block;  // 0 = factor 1, 1 = factor 2, 2 = tree edge
    int index;
    copula_family family;
  };
  std::vector<entry> entries;

  static param_layout make(const model_spec& spec) {
    param_layout lay;
    auto add = [&](int block, const std::vector<copula_family>& fams) {
      for (size_t i = 0; i < fams.size(); ++i)
        if (fams[i].has_parameter()) lay.entries.push_back({block, static_cast<int>(i), fams[i]});
    };
    add(0, spec.fam1);
    add(1, spec.fam2);
    add(2, spec.fam_tree);
    return lay;
  }

  int size() const { return static_cast<int>(entries.size()); }

  std::vector<double> pack(const param_vector& par, bool transformed) const {
    std::vector<double> v(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const double th = e.block == 0   ? par.theta1[e.index]
                        : e.block == 1 ? par.theta2[e.index]
                                       : par.delta[e.index];
      v[i] = transformed ? to_unconstrained(e.family, th) : th;
    }
    return v;
  }

  param_vector unpack(const std::vector<double>& v, const model_spec& spec,
                      bool transformed) const {
    param_vector par = param_vector::zeros_like(spec);
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const double th = transformed ? from_unconstrained(e.family, v[i]) : v[i];
      (e.block == 0 ? par.theta1 : e.block == 1 ? par.theta2 : par.delta)[e.index] = th;
    }
    return par;
  }
};

struct fit_options {
  int max_iterations = 500;
  double grad_tol = 1e-6;  // relative to max(1, |loglik|) on the transformed scale
  double fd_step = 1e-6;
  bool warm_start_edges = true;
  double start_tau_factor1 = 0.5;
  double start_tau_factor2 = 0.1;
  double fallback_tau_edge = 0.1;
  int identification_item = -1;  // -1: last item, for Gaussian 2-factor specs
  bool compute_standard_errors = false;
};

struct fit_result {
  model_spec spec;  // identification already applied
  cutpoint_set cut;
  param_vector params;
  std::vector<double> tau1, tau2, tau_tree;
  std::vector<double> se_theta1, se_theta2, se_theta_tree;
  std::vector<double> se_tau1, se_tau2, se_tau_tree;
  double loglik = 0.0;
  double aic = 0.0;
  int n_params = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> final_gradient;  // transformed scale, optimizer's estimate
  bool se_computed = false;
  bool se_positive_definite = true;
  std::vector<std::string> warnings;
};

namespace detail {

inline double clamp_tau_for_family(const copula_family& f, double tau) {
  switch (f.tag) {
    case family_tag::gumbel:
    case family_tag::survival_gumbel: return std::min(0.9, std::max(0.02, tau));
    case family_tag::frank: {
      double t = std::min(0.9, std::max(-0.9, tau));
      if (std::fabs(t) < 0.01) t = t >= 0.0 ? 0.01 : -0.01;
      return t;
    }
    default: return std::min(0.9, std::max(-0.9, tau));
  }
}

inline double dtau_dtheta(const copula_family& f, double theta) {
  switch (f.tag) {
    case family_tag::bvn:
    case family_tag::student_t: return 2.0 / (pi * std::sqrt(1.0 - theta * theta));
    case family_tag::gumbel:
    case family_tag::survival_gumbel: return 1.0 / (theta * theta);
    case family_tag::frank: {
      const double h = 1e-5 * (1.0 + std::fabs(theta));
      return (theta_to_tau(f, theta + h) - theta_to_tau(f, theta - h)) / (2.0 * h);
    }
    default: return 0.0;
  }
}

inline std::vector<double> taus_of(const std::vector<copula_family>& fams,
                                   const std::vector<double>& thetas) {
  std::vector<double> taus(thetas.size(), 0.0);
  for (size_t i = 0; i < thetas.size(); ++i)
    if (fams[i].has_parameter()) taus[i] = theta_to_tau(fams[i], thetas[i]);
  return taus;
}

}  // namespace detail

inline fit_result fit_ifm(const response_matrix& data, model_spec spec,
                          const quadrature_rule& rule, const fit_options& opt = {});

// Loadings of the p-dimensional normal ogive model (all-BVN factor copula).
inline std::pair<std::vector<double>, std::vector<double>> normal_ogive_loadings(
    const response_matrix& data, int p, const quadrature_rule& rule,
    fit_options opt = {}) {
  model_spec spec = model_spec::factor(p, data.d, copula_family::bvn());
  opt.warm_start_edges = false;
  opt.compute_standard_errors = false;
  const fit_result fit = fit_ifm(data, spec, rule, opt);
  return {fit.params.theta1, fit.params.theta2};
}

// Observed-information standard errors: central-difference Hessian of the
// step-2 log-likelihood in the natural parameters, delta method to the tau
// scale. An indefinite Hessian is reported, not repaired silently.
inline void standard_errors(fit_result& fit, const response_matrix& data,
                            const quadrature_rule& rule) {
  const row_table rows = row_table::aggregate(data);
  const param_layout layout = param_layout::make(fit.spec);
  const int n = layout.size();
  fit.se_theta1.assign(fit.params.theta1.size(), 0.0);
  fit.se_theta2.assign(fit.params.theta2.size(), 0.0);
  fit.se_theta_tree.assign(fit.params.delta.size(), 0.0);
  fit.se_tau1.assign(fit.params.theta1.size(), 0.0);
  fit.se_tau2.assign(fit.params.theta2.size(), 0.0);
  fit.se_tau_tree.assign(fit.params.delta.size(), 0.0);
  if (n == 0) {
    fit.se_computed = true;
    return;
  }

  const std::vector<double> theta = layout.pack(fit.params, false);
  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) {
    const auto& fam = layout.entries[i].family;
    double hi = 1e-4 * std::max(1.0, std::fabs(theta[i]));
    if (fam.tag == family_tag::bvn || fam.tag == family_tag::student_t)
      hi = std::min(hi, (1.0 - std::fabs(theta[i])) / 8.0);
    if (fam.tag == family_tag::gumbel || fam.tag == family_tag::survival_gumbel)
      hi = std::min(hi, std::max((theta[i] - 1.0) / 8.0, 1e-9));
    h[i] = std::max(hi, 1e-8);
  }
  auto objective = [&](const std::vector<double>& th) {
    return loglik(rows, fit.cut, fit.spec, layout.unpack(th, fit.spec, false), rule);
  };
  Eigen::MatrixXd H = numerical_hessian(objective, theta, h);
  Eigen::MatrixXd info = -0.5 * (H + H.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const double max_eig = eig.eigenvalues().maxCoeff();
  const double tol = std::max(max_eig, 1.0) * 1e-10;
  Eigen::MatrixXd cov;
  if (eig.eigenvalues().minCoeff() > tol) {
    cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
          eig.eigenvectors().transpose();
    fit.se_positive_definite = true;
  } else {
    // pseudo-inverse over the positive part
    Eigen::VectorXd inv = eig.eigenvalues();
    for (int i = 0; i < n; ++i) inv[i] = inv[i] > tol ? 1.0 / inv[i] : 0.0;
    cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    fit.se_positive_definite = false;
    fit.warnings.push_back(
        "observed information is not positive definite; pseudo-inverse standard errors");
  }
  for (int i = 0; i < n; ++i) {
    const auto& e = layout.entries[i];
    const double se = std::sqrt(std::max(cov(i, i), 0.0));
    const double dse = std::fabs(detail::dtau_dtheta(e.family, theta[i])) * se;
    if (e.block == 0) {
      fit.se_theta1[e.index] = se;
      fit.se_tau1[e.index] = dse;
    } else if (e.block == 1) {
      fit.se_theta2[e.index] = se;
      fit.se_tau2[e.index] = dse;
    } else {
      fit.se_theta_tree[e.index] = se;
      fit.se_tau_tree[e.index] = dse;
    }
  }
  fit.se_computed = true;
}

// Two-step IFM: cutpoints from sample proportions, then quasi-Newton
// maximisation of the joint log-likelihood over the copula parameters on
// the unconstrained scale, cutpoints held fixed.
inline fit_result fit_ifm(const response_matrix& data, model_spec spec,
                          const quadrature_rule& rule, const fit_options& opt) {
  data.validate();
  spec = apply_identification(spec, opt.identification_item);
  spec.validate(data.d);

  fit_result out;
  out.cut = estimate_cutpoints(data);
  out.spec = spec;
  const row_table rows = row_table::aggregate(data);
  const param_layout layout = param_layout::make(spec);
  out.n_params = layout.size();

  // starting values
  param_vector start = param_vector::zeros_like(spec);
  for (size_t j = 0; j < spec.fam1.size(); ++j)
    if (spec.fam1[j].has_parameter())
      start.theta1[j] = tau_to_theta(
          spec.fam1[j], detail::clamp_tau_for_family(spec.fam1[j], opt.start_tau_factor1));
  for (size_t j = 0; j < spec.fam2.size(); ++j)
    if (spec.fam2[j].has_parameter())
      start.theta2[j] = tau_to_theta(
          spec.fam2[j], detail::clamp_tau_for_family(spec.fam2[j], opt.start_tau_factor2));

  std::vector<double> edge_tau(spec.fam_tree.size(), opt.fallback_tau_edge);
  if (spec.tree && opt.warm_start_edges) {
    try {
      std::vector<double> l1, l2;
      if (spec.factors >= 1) {
        auto loadings = normal_ogive_loadings(data, spec.factors, rule, opt);
        l1 = loadings.first;
        l2 = loadings.second;
      }
      for (size_t e = 0; e < spec.tree->edges.size(); ++e) {
        const auto& ed = spec.tree->edges[e];
        double rho = polychoric(data, out.cut, ed.a, ed.b).rho;
        if (spec.factors >= 1) rho = partial_corr(rho, l1[ed.a], l1[ed.b]).rho;
        if (spec.factors == 2) rho = partial_corr(rho, l2[ed.a], l2[ed.b]).rho;
        edge_tau[e] = 2.0 / pi * std::asin(rho);
      }
    } catch (const std::exception& ex) {
      out.warnings.push_back(std::string("edge warm start failed (") + ex.what() +
                             "); using flat starts");
      edge_tau.assign(spec.fam_tree.size(), opt.fallback_tau_edge);
    }
  }
  for (size_t e = 0; e < spec.fam_tree.size(); ++e)
    if (spec.fam_tree[e].has_parameter())
      start.delta[e] =
          tau_to_theta(spec.fam_tree[e], detail::clamp_tau_for_family(spec.fam_tree[e], edge_tau[e]));

  auto objective = [&](const std::vector<double>& gamma) {
    return loglik(rows, out.cut, spec, layout.unpack(gamma, spec, true), rule);
  };
  optim_options oopt;
  oopt.max_iterations = opt.max_iterations;
  oopt.grad_tol = opt.grad_tol;
  oopt.fd_step = opt.fd_step;
  optim_result best = bfgs_maximize(objective, layout.pack(start, true), oopt);
  if (!std::isfinite(best.f))
    throw std::runtime_error("fit_ifm: log-likelihood not finite at the starting values");

  // a Frank edge stuck at the exclusion zone may have its optimum on the
  // mirrored side; restart once from the sign-flipped point
  bool near_exclusion = false;
  for (int i = 0; i < layout.size(); ++i)
    if (layout.entries[i].family.tag == family_tag::frank &&
        std::fabs(best.x[i]) <= 10.0 * frank_exclusion)
      near_exclusion = true;
  if (near_exclusion) {
    std::vector<double> mirrored = best.x;
    for (int i = 0; i < layout.size(); ++i)
      if (layout.entries[i].family.tag == family_tag::frank &&
          std::fabs(mirrored[i]) <= 10.0 * frank_exclusion)
        mirrored[i] = mirrored[i] >= 0.0 ? -frank_exclusion * 2.0 : frank_exclusion * 2.0;
    optim_result alt = bfgs_maximize(objective, mirrored, oopt);
    if (alt.f > best.f) best = std::move(alt);
  }

  out.params = layout.unpack(best.x, spec, true);
  out.loglik = best.f;
  out.aic = -2.0 * best.f + 2.0 * out.n_params;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.final_gradient = best.gradient;
  out.tau1 = detail::taus_of(spec.fam1, out.params.theta1);
  out.tau2 = detail::taus_of(spec.fam2, out.params.theta2);
  out.tau_tree = detail::taus_of(spec.fam_tree, out.params.delta);
  if (opt.compute_standard_errors) standard_errors(out, data, rule);
  return out;
}

}  // namespace ftcop
