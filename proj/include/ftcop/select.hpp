#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include "ftcop/diagnose.hpp"
#include "ftcop/estimate.hpp"
#include "ftcop/polychoric.hpp"

namespace ftcop {

namespace detail {

// run fn(0..count-1) on up to `threads` workers, results in order
template <typename T>
std::vector<T> parallel_map(int count, int threads,
                            const std::function<T(int)>& fn) {
  std::vector<T> out(count);
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) out[i] = fn(i);
  };
  std::vector<std::future<void>> pool;
  for (int t = 0; t < std::min(threads, count) - 1; ++t)
    pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  return out;
}

}  // namespace detail

// Prim minimum spanning tree with a deterministic lexicographic tie-break
// on (min endpoint, max endpoint).
inline edge_set mst_min_weight(const Eigen::MatrixXd& weights) {
  const int d = static_cast<int>(weights.rows());
  if (weights.cols() != d || d < 2) throw std::domain_error("mst: need a square matrix, d >= 2");
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      if (j != k && !std::isfinite(weights(j, k)))
        throw std::domain_error("mst: weights must be finite");

  std::vector<bool> in_tree(d, false);
  std::vector<double> best(d, std::numeric_limits<double>::infinity());
  std::vector<int> parent(d, 0);
  in_tree[0] = true;
  for (int j = 1; j < d; ++j) best[j] = weights(0, j);

  edge_set es;
  es.provenance = "prim";
  for (int step = 1; step < d; ++step) {
    int pick = -1;
    for (int j = 0; j < d; ++j) {
      if (in_tree[j]) continue;
      if (pick < 0) {
        pick = j;
        continue;
      }
      const edge ej(parent[j], j), ep(parent[pick], pick);
      if (best[j] < best[pick] || (best[j] == best[pick] && ej < ep)) pick = j;
    }
    es.edges.emplace_back(parent[pick], pick);
    in_tree[pick] = true;
    for (int j = 0; j < d; ++j)
      if (!in_tree[j]) {
        const double w = weights(pick, j);
        const edge cand(pick, j), cur(parent[j], j);
        if (w < best[j] || (w == best[j] && cand < cur)) {
          best[j] = w;
          parent[j] = pick;
        }
      }
  }
  std::sort(es.edges.begin(), es.edges.end());
  return es;
}

enum class tree_variant { polychoric, partial_1f, partial_2f };

inline std::string tree_variant_name(tree_variant v) {
  switch (v) {
    case tree_variant::polychoric: return "polychoric";
    case tree_variant::partial_1f: return "partial-1f";
    case tree_variant::partial_2f: return "partial-2f";
  }
  return "?";
}

// Residual-tree structure selection: minimum spanning tree over
// log(1 - rho^2) weights, where rho is the polychoric correlation or its
// partial version given the normal-ogive factors.
inline edge_set select_tree(const response_matrix& data, const cutpoint_set& cut,
                            tree_variant variant, const quadrature_rule& rule,
                            const fit_options& opt = {}) {
  Eigen::MatrixXd R = polychoric_matrix(data, cut);
  if (variant != tree_variant::polychoric) {
    const int p = variant == tree_variant::partial_1f ? 1 : 2;
    const auto [l1, l2] = normal_ogive_loadings(data, p, rule, opt);
    for (int j = 0; j < data.d; ++j)
      for (int k = j + 1; k < data.d; ++k) {
        double rho = partial_corr(R(j, k), l1[j], l1[k]).rho;
        if (p == 2) rho = partial_corr(rho, l2[j], l2[k]).rho;
        R(j, k) = R(k, j) = rho;
      }
  }
  Eigen::MatrixXd W(data.d, data.d);
  for (int j = 0; j < data.d; ++j)
    for (int k = 0; k < data.d; ++k)
      W(j, k) = j == k ? 0.0 : std::log1p(-R(j, k) * R(j, k));
  edge_set es = mst_min_weight(W);
  es.provenance = tree_variant_name(variant);
  return es;
}

struct selection_candidates {
  std::vector<copula_family> factor;
  std::vector<copula_family> tree;

  static selection_candidates defaults() {
    selection_candidates c;
    c.factor = {copula_family::bvn(), copula_family::gumbel(), copula_family::survival_gumbel(),
                copula_family::student_t(2.0), copula_family::student_t(5.0)};
    c.tree = c.factor;
    c.tree.push_back(copula_family::frank());
    return c;
  }
};

struct selection_step {
  std::string step;
  std::vector<std::pair<std::string, double>> logliks;  // candidate -> loglik
  std::string winner;
};

struct tree_variant_report {
  std::string variant;
  edge_set tree;
  std::string family;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double aic = std::numeric_limits<double>::quiet_NaN();
};

struct selection_result {
  model_spec spec;
  fit_result fit;
  std::vector<selection_step> steps;
  std::vector<tree_variant_report> tree_reports;
  std::string tree_winner;
  std::vector<std::string> warnings;
};

struct selection_options {
  fit_options fit;
  int threads = 1;
};

// Sequential copula selection: start all-BVN factors with an independence
// residual tree, pick the factor-1 family by log-likelihood, then factor-2,
// then the residual tree structure (both selection algorithms) and its
// family, one family per tree throughout.
inline selection_result select_families(const response_matrix& data, const cutpoint_set& cut,
                                        const model_spec& skeleton,
                                        const selection_candidates& candidates,
                                        const quadrature_rule& rule,
                                        const selection_options& sopt = {}) {
  selection_result out;
  const int p = skeleton.factors;
  const int d = data.d;

  auto try_fit = [&](const model_spec& spec) -> std::pair<double, fit_result> {
    try {
      fit_result f = fit_ifm(data, spec, rule, sopt.fit);
      return {f.loglik, std::move(f)};
    } catch (const std::exception& ex) {
      out.warnings.push_back(std::string("candidate fit failed: ") + ex.what());
      return {-std::numeric_limits<double>::infinity(), fit_result{}};
    }
  };

  copula_family fam1 = copula_family::bvn();
  copula_family fam2 = copula_family::bvn();

  auto factor_spec = [&](copula_family f1, copula_family f2) {
    return model_spec::factor(p, d, f1, f2);
  };

  // factor family steps
  fit_result incumbent;
  if (p >= 1) {
    for (int level = 1; level <= p; ++level) {
      selection_step step;
      step.step = level == 1 ? "factor1" : "factor2";
      const auto& pool = candidates.factor;
      auto fits = detail::parallel_map<std::pair<double, fit_result>>(
          static_cast<int>(pool.size()), sopt.threads, [&](int i) {
            return try_fit(factor_spec(level == 1 ? pool[i] : fam1,
                                       level == 1 ? fam2 : pool[i]));
          });
      int best = -1;
      for (size_t i = 0; i < pool.size(); ++i) {
        step.logliks.push_back({family_name(pool[i]), fits[i].first});
        if (best < 0 || fits[i].first > fits[best].first) best = static_cast<int>(i);
      }
      if (best < 0 || !std::isfinite(fits[best].first))
        throw std::runtime_error("select_families: every factor candidate fit failed");
      (level == 1 ? fam1 : fam2) = pool[best];
      step.winner = family_name(pool[best]);
      incumbent = std::move(fits[best].second);
      out.steps.push_back(std::move(step));
    }
  }

  // residual tree structure: explicit skeleton tree, or both algorithms
  std::vector<std::pair<std::string, edge_set>> trees;
  if (skeleton.tree) {
    trees.push_back({"given", *skeleton.tree});
  } else if (p == 0) {
    trees.push_back({"polychoric",
                     select_tree(data, cut, tree_variant::polychoric, rule, sopt.fit)});
  } else {
    trees.push_back({"partial", select_tree(data, cut,
                                            p == 2 ? tree_variant::partial_2f
                                                   : tree_variant::partial_1f,
                                            rule, sopt.fit)});
    trees.push_back({"polychoric",
                     select_tree(data, cut, tree_variant::polychoric, rule, sopt.fit)});
  }

  model_spec best_spec;
  fit_result best_fit;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (const auto& [label, tree] : trees) {
    selection_step step;
    step.step = "tree_family(" + label + ")";
    const auto& pool = candidates.tree;
    auto fits = detail::parallel_map<std::pair<double, fit_result>>(
        static_cast<int>(pool.size()), sopt.threads, [&](int i) {
          return try_fit(factor_spec(fam1, fam2).with_tree(tree, pool[i]));
        });
    int best = -1;
    for (size_t i = 0; i < pool.size(); ++i) {
      step.logliks.push_back({family_name(pool[i]), fits[i].first});
      if (best < 0 || fits[i].first > fits[best].first) best = static_cast<int>(i);
    }
    tree_variant_report rep;
    rep.variant = label;
    rep.tree = tree;
    if (best >= 0 && std::isfinite(fits[best].first)) {
      step.winner = family_name(pool[best]);
      rep.family = step.winner;
      rep.loglik = fits[best].first;
      rep.aic = fits[best].second.aic;
      if (fits[best].first > best_ll) {
        best_ll = fits[best].first;
        best_fit = std::move(fits[best].second);
        best_spec = factor_spec(fam1, fam2).with_tree(tree, pool[best]);
        out.tree_winner = label;
      }
    }
    out.tree_reports.push_back(std::move(rep));
    out.steps.push_back(std::move(step));
  }

  // the argmax at every step includes the incumbent family, so the final
  // model can only fall below the factor-only fit if a tree fit failed
  if (!std::isfinite(best_ll)) {
    if (p == 0) throw std::runtime_error("select_families: every tree-family fit failed");
    out.warnings.push_back("tree-family fits all failed; keeping the factor model with an "
                           "independence tree");
    best_spec = factor_spec(fam1, fam2);
    if (!trees.empty())
      best_spec = best_spec.with_tree(trees.front().second, copula_family::independence());
    best_fit = std::move(incumbent);
    out.tree_winner = "independence";
  } else if (p >= 1 && best_ll < incumbent.loglik - 1e-6) {
    out.warnings.push_back("tree-family fits underperformed the factor model; keeping it with an "
                           "independence tree");
    best_spec = factor_spec(fam1, fam2).with_tree(trees.front().second,
                                                  copula_family::independence());
    best_fit = std::move(incumbent);
    out.tree_winner = "independence";
  }
  out.spec = std::move(best_spec);
  out.fit = std::move(best_fit);
  return out;
}

// ---- semi-correlations ----

namespace detail {

struct quadrant_moments {
  double p = 0.0, e1 = 0.0, e2 = 0.0, e1sq = 0.0, e2sq = 0.0, e11 = 0.0;

  double correlation() const {
    const double m1 = e1 / p, m2 = e2 / p;
    const double v1 = e1sq / p - m1 * m1, v2 = e2sq / p - m2 * m2;
    return (e11 / p - m1 * m2) / std::sqrt(v1 * v2);
  }
};

// moments of the normal scores restricted to a joint quadrant, from 1-D/2-D
// integrals of the joint cdf (no copula density needed)
inline quadrant_moments normal_scores_quadrant(const copula_family& fam, double theta,
                                               bool upper) {
  static const quadrature_rule gl = gauss_legendre_unit(48);
  const double L = 8.0;
  auto H = [&](double s1, double s2) {
    const double c = copula_cdf(fam, theta, norm_cdf(s1), norm_cdf(s2));
    if (!upper) return c;
    return 1.0 - norm_cdf(s1) - norm_cdf(s2) + c;
  };
  quadrant_moments m;
  m.p = H(0.0, 0.0);
  std::vector<double> node(gl.size()), wt(gl.size());
  for (int q = 0; q < gl.size(); ++q) {
    node[q] = upper ? L * gl.nodes[q] : -L * (1.0 - gl.nodes[q]);
    wt[q] = L * gl.weights[q];
  }
  const double sgn = upper ? 1.0 : -1.0;
  for (int q = 0; q < gl.size(); ++q) {
    const double hq = H(node[q], 0.0);
    const double hq2 = H(0.0, node[q]);
    m.e1 += sgn * wt[q] * hq;
    m.e2 += sgn * wt[q] * hq2;
    m.e1sq += 2.0 * std::fabs(node[q]) * wt[q] * hq;
    m.e2sq += 2.0 * std::fabs(node[q]) * wt[q] * hq2;
    for (int r = 0; r < gl.size(); ++r) m.e11 += wt[q] * wt[r] * H(node[q], node[r]);
  }
  return m;
}

}  // namespace detail

// Correlation of the copula's normal scores (Hoeffding identity).
inline double normal_scores_corr(const copula_family& fam, double theta) {
  static const quadrature_rule gl = gauss_legendre_unit(48);
  const double L = 8.0;
  double cov = 0.0;
  for (int q = 0; q < gl.size(); ++q) {
    const double x = L * (2.0 * gl.nodes[q] - 1.0);
    const double px = norm_cdf(x);
    for (int r = 0; r < gl.size(); ++r) {
      const double y = L * (2.0 * gl.nodes[r] - 1.0);
      cov += 4.0 * L * L * gl.weights[q] * gl.weights[r] *
             (copula_cdf(fam, theta, px, norm_cdf(y)) - px * norm_cdf(y));
    }
  }
  return cov;
}

// Parameter at which the family's normal-scores correlation hits the target.
inline double calibrate_theta_for_rho_n(const copula_family& fam, double rho_n) {
  double lo, hi;
  switch (fam.tag) {
    case family_tag::bvn:
    case family_tag::student_t: lo = -0.999; hi = 0.999; break;
    case family_tag::gumbel:
    case family_tag::survival_gumbel: lo = 1.0 + 1e-9; hi = 50.0; break;
    case family_tag::frank: lo = rho_n >= 0 ? 1e-4 : -60.0; hi = rho_n >= 0 ? 60.0 : -1e-4; break;
    default:
      if (rho_n != 0.0)
        throw std::domain_error("calibrate_theta_for_rho_n: independence cannot reach target");
      return 0.0;
  }
  auto g = [&](double th) { return normal_scores_corr(fam, th) - rho_n; };
  double glo = g(lo), ghi = g(hi);
  if (glo * ghi > 0.0) throw std::domain_error("calibrate_theta_for_rho_n: target out of range");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (std::fabs(gm) < 1e-9 || hi - lo < 1e-12) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Theoretical lower/upper semi-correlations: correlation of the normal
// scores conditioned on both lying in the joint lower (upper) quadrant.
inline std::pair<double, double> theoretical_semi_corr(const copula_family& fam, double theta) {
  const auto lower = detail::normal_scores_quadrant(fam, theta, false);
  const auto upper = detail::normal_scores_quadrant(fam, theta, true);
  return {lower.correlation(), upper.correlation()};
}

struct semi_corr_result {
  double rho_n = 0.0;      // average polychoric correlation over pairs
  double rho_lower = 0.0;  // average lower semi-correlation
  double rho_upper = 0.0;  // average upper semi-correlation
  int pairs = 0;
  int skipped_lower = 0, skipped_upper = 0;
};

// Observed semi-correlations: polychoric correlations recomputed from the
// sub-sample where both items fall in their lower (upper) halves, halves
// being split at the cutpoint closest to 1/2. The estimator the paper uses
// is defined in a companion reference; this is a documented interpretation.
inline semi_corr_result semi_correlations(const response_matrix& data,
                                          const cutpoint_set& cut) {
  semi_corr_result out;
  const int d = data.d;
  std::vector<int> median_cut(d);
  for (int j = 0; j < d; ++j) {
    int best = 1;
    for (int k = 1; k < cut.categories(j); ++k)
      if (std::fabs(cut.a[j][k] - 0.5) < std::fabs(cut.a[j][best] - 0.5)) best = k;
    median_cut[j] = best;
  }

  auto half_polychoric = [&](int j, int k, bool upper, bool& ok) {
    // collect the sub-sample pair values, relabelled to 0..
    const int mj = median_cut[j], mk = median_cut[k];
    std::vector<std::pair<int, int>> sub;
    for (int i = 0; i < data.n; ++i) {
      const int yj = data.y(i, j), yk = data.y(i, k);
      const bool in_j = upper ? yj >= mj : yj < mj;
      const bool in_k = upper ? yk >= mk : yk < mk;
      if (in_j && in_k) sub.push_back({upper ? yj - mj : yj, upper ? yk - mk : yk});
    }
    const int Kj = upper ? data.category_counts[j] - mj : mj;
    const int Kk = upper ? data.category_counts[k] - mk : mk;
    ok = false;
    if (sub.size() < 10 || Kj < 2 || Kk < 2) return 0.0;
    pair_table t;
    t.Kj = Kj;
    t.Kk = Kk;
    t.counts.assign(static_cast<size_t>(Kj) * Kk, 0.0);
    for (auto [a, b] : sub) t.at(a, b) += 1.0;
    // sub-sample cutpoints from its own margins
    auto alphas = [&](int K, bool row) {
      std::vector<double> counts(K, 0.0);
      for (int a = 0; a < t.Kj; ++a)
        for (int b = 0; b < t.Kk; ++b) counts[row ? a : b] += t.at(a, b);
      std::vector<double> al(K + 1, 0.0);
      double cum = 0.0;
      for (int c = 0; c < K; ++c) {
        cum += counts[c];
        if (counts[c] <= 0.0) return std::vector<double>{};  // degenerate half
        al[c + 1] = norm_quantile(std::min(1.0 - 1e-12, cum / sub.size()));
      }
      return al;
    };
    const auto aj = alphas(Kj, true);
    const auto ak = alphas(Kk, false);
    if (aj.empty() || ak.empty()) return 0.0;
    ok = true;
    return polychoric_from_table(t, aj, ak).rho;
  };

  double sn = 0.0, sl = 0.0, su = 0.0;
  int nl = 0, nu = 0;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      sn += polychoric(data, cut, j, k).rho;
      out.pairs++;
      bool ok = false;
      const double lo = half_polychoric(j, k, false, ok);
      if (ok) {
        sl += lo;
        nl++;
      } else {
        out.skipped_lower++;
      }
      const double up = half_polychoric(j, k, true, ok);
      if (ok) {
        su += up;
        nu++;
      } else {
        out.skipped_upper++;
      }
    }
  out.rho_n = sn / out.pairs;
  out.rho_lower = nl ? sl / nl : 0.0;
  out.rho_upper = nu ? su / nu : 0.0;
  return out;
}

}  // namespace ftcop
