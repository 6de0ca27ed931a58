#pragma once

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "ftcop/copula.hpp"
#include "ftcop/data.hpp"
#include "ftcop/model.hpp"
#include "ftcop/quadrature.hpp"

namespace ftcop {

inline constexpr double pmf_floor = 1e-300;

// Evaluates the joint pmf of a factor tree copula model. All conditional
// cdf values that do not depend on the outcome y are tabulated up front,
// so evaluating a row costs O(n_q^p (d + |E|)) multiplications. Conditional
// cdf values are clamped into [1e-12, 1-1e-12] at interior cutpoints and
// kept exactly 0/1 at the boundary ones, which keeps every outcome sum
// telescoping to 1.
class pmf_evaluator {
 public:
  pmf_evaluator(const cutpoint_set& cut, const model_spec& spec, const param_vector& par,
                const quadrature_rule& rule)
      : d_(cut.d()), p_(spec.factors), nq_(rule.size()), rule_(rule) {
    spec.validate(d_);
    par.validate(spec);
    K_.resize(d_);
    for (int j = 0; j < d_; ++j) K_[j] = cut.categories(j);
    if (spec.tree) {
      edges_ = spec.tree->edges;
      edge_indep_.resize(edges_.size());
      for (size_t e = 0; e < edges_.size(); ++e)
        edge_indep_[e] = !spec.fam_tree[e].has_parameter();
    }
    if (p_ == 0) {
      build_vine(cut, spec, par);
    } else {
      build_factor1(cut, spec, par);
      if (p_ == 2) build_factor2(cut, spec, par);
      if (spec.tree) build_edges(cut, spec, par);
    }
  }

  int dimension() const { return d_; }
  int categories(int j) const { return K_[j]; }

  double pmf(std::span<const int> y) const {
    if (static_cast<int>(y.size()) != d_) throw std::domain_error("pmf: wrong outcome length");
    for (int j = 0; j < d_; ++j)
      if (y[j] < 0 || y[j] >= K_[j]) throw std::domain_error("pmf: category out of range");
    double val;
    if (p_ == 0) val = pmf_vine_impl(y);
    else if (p_ == 1) val = pmf_f1_impl(y);
    else val = pmf_f2_impl(y);
    return std::max(val, pmf_floor);
  }

  double pmf(const std::vector<int>& y) const { return pmf(std::span<const int>(y)); }

 private:
  int d_, p_, nq_;
  quadrature_rule rule_;
  std::vector<int> K_;
  std::vector<edge> edges_;
  std::vector<char> edge_indep_;

  // factor tables: f1_[(off1_[j]+k)*nq + q], k = 0..K_j
  std::vector<int> off1_;
  std::vector<double> f1_;
  // f2_[(off1_[j]+k)*nq*nq + q1*nq + q2]
  std::vector<double> f2_;
  // edge corner tables: ce_[(offe_[e] + kj*(K_b+1) + kk) * nodes + node]
  std::vector<int> offe_;
  std::vector<double> ce_;
  // vine tables
  std::vector<std::vector<double>> pj_;
  std::vector<std::vector<double>> pe_;  // per edge, (y_a * K_b + y_b)

  static double clamp_interior(double v, int k, int K) {
    if (k == 0) return 0.0;
    if (k == K) return 1.0;
    return clamp_unit(v);
  }

  void build_factor1(const cutpoint_set& cut, const model_spec& spec, const param_vector& par) {
    off1_.resize(d_ + 1);
    off1_[0] = 0;
    for (int j = 0; j < d_; ++j) off1_[j + 1] = off1_[j] + K_[j] + 1;
    f1_.assign(static_cast<size_t>(off1_[d_]) * nq_, 0.0);

    std::vector<double> zx;  // normal quantiles of the latent nodes
    for (int j = 0; j < d_; ++j) {
      const auto& fam = spec.fam1[j];
      const double th = par.theta1[j];
      const auto& aj = cut.a[j];
      auto put = [&](int k, int q, double v) {
        f1_[(static_cast<size_t>(off1_[j]) + k) * nq_ + q] = clamp_interior(v, k, K_[j]);
      };
      switch (fam.tag) {
        case family_tag::independence:
          for (int k = 0; k <= K_[j]; ++k)
            for (int q = 0; q < nq_; ++q) put(k, q, aj[k]);
          break;
        case family_tag::bvn: {
          if (zx.empty()) {
            zx.resize(nq_);
            for (int q = 0; q < nq_; ++q) zx[q] = norm_quantile(rule_.nodes[q]);
          }
          const double s = 1.0 / std::sqrt(1.0 - th * th);
          for (int k = 0; k <= K_[j]; ++k) {
            if (k == 0 || k == K_[j]) {
              for (int q = 0; q < nq_; ++q) put(k, q, k == 0 ? 0.0 : 1.0);
              continue;
            }
            const double za = norm_quantile(clamp_unit(aj[k]));
            for (int q = 0; q < nq_; ++q) put(k, q, norm_cdf((za - th * zx[q]) * s));
          }
          break;
        }
        case family_tag::student_t: {
          const double nu = fam.dof;
          std::vector<double> tx(nq_);
          for (int q = 0; q < nq_; ++q) tx[q] = t_quantile(rule_.nodes[q], nu);
          const double c = (nu + 1.0) / (1.0 - th * th);
          for (int k = 0; k <= K_[j]; ++k) {
            if (k == 0 || k == K_[j]) {
              for (int q = 0; q < nq_; ++q) put(k, q, k == 0 ? 0.0 : 1.0);
              continue;
            }
            const double ta = t_quantile(clamp_unit(aj[k]), nu);
            for (int q = 0; q < nq_; ++q) {
              const double s = (ta - th * tx[q]) * std::sqrt(c / (nu + tx[q] * tx[q]));
              put(k, q, t_cdf(s, nu + 1.0));
            }
          }
          break;
        }
        default:
          for (int k = 0; k <= K_[j]; ++k)
            for (int q = 0; q < nq_; ++q)
              put(k, q, cond_cdf(fam, th, aj[k], rule_.nodes[q]));
      }
    }
  }

  void build_factor2(const cutpoint_set& cut, const model_spec& spec, const param_vector& par) {
    (void)cut;
    const size_t nn = static_cast<size_t>(nq_) * nq_;
    f2_.assign(static_cast<size_t>(off1_[d_]) * nn, 0.0);
    std::vector<double> zx;
    for (int j = 0; j < d_; ++j) {
      const auto& fam = spec.fam2[j];
      const double th = par.theta2[j];
      auto f1v = [&](int k, int q1) {
        return f1_[(static_cast<size_t>(off1_[j]) + k) * nq_ + q1];
      };
      auto put = [&](int k, int q1, int q2, double v) {
        f2_[(static_cast<size_t>(off1_[j]) + k) * nn + static_cast<size_t>(q1) * nq_ + q2] =
            clamp_interior(v, k, K_[j]);
      };
      switch (fam.tag) {
        case family_tag::independence:
          for (int k = 0; k <= K_[j]; ++k)
            for (int q1 = 0; q1 < nq_; ++q1)
              for (int q2 = 0; q2 < nq_; ++q2) put(k, q1, q2, f1v(k, q1));
          break;
        case family_tag::bvn: {
          if (zx.empty()) {
            zx.resize(nq_);
            for (int q = 0; q < nq_; ++q) zx[q] = norm_quantile(rule_.nodes[q]);
          }
          const double s = 1.0 / std::sqrt(1.0 - th * th);
          for (int k = 0; k <= K_[j]; ++k)
            for (int q1 = 0; q1 < nq_; ++q1) {
              if (k == 0 || k == K_[j]) {
                for (int q2 = 0; q2 < nq_; ++q2) put(k, q1, q2, k == 0 ? 0.0 : 1.0);
                continue;
              }
              const double zu = norm_quantile(f1v(k, q1));
              for (int q2 = 0; q2 < nq_; ++q2)
                put(k, q1, q2, norm_cdf((zu - th * zx[q2]) * s));
            }
          break;
        }
        case family_tag::student_t: {
          const double nu = fam.dof;
          std::vector<double> tx(nq_);
          for (int q = 0; q < nq_; ++q) tx[q] = t_quantile(rule_.nodes[q], nu);
          const double c = (nu + 1.0) / (1.0 - th * th);
          for (int k = 0; k <= K_[j]; ++k)
            for (int q1 = 0; q1 < nq_; ++q1) {
              if (k == 0 || k == K_[j]) {
                for (int q2 = 0; q2 < nq_; ++q2) put(k, q1, q2, k == 0 ? 0.0 : 1.0);
                continue;
              }
              const double tu = t_quantile(f1v(k, q1), nu);
              for (int q2 = 0; q2 < nq_; ++q2) {
                const double s = (tu - th * tx[q2]) * std::sqrt(c / (nu + tx[q2] * tx[q2]));
                put(k, q1, q2, t_cdf(s, nu + 1.0));
              }
            }
          break;
        }
        default:
          for (int k = 0; k <= K_[j]; ++k)
            for (int q1 = 0; q1 < nq_; ++q1)
              for (int q2 = 0; q2 < nq_; ++q2)
                put(k, q1, q2, cond_cdf(fam, th, f1v(k, q1), rule_.nodes[q2]));
      }
    }
  }

  // conditional-scale value of item j at cutpoint k and latent node(s)
  double fval(int j, int k, int node) const {
    if (p_ == 1) return f1_[(static_cast<size_t>(off1_[j]) + k) * nq_ + node];
    return f2_[(static_cast<size_t>(off1_[j]) + k) * nq_ * nq_ + node];
  }

  void build_edges(const cutpoint_set& cut, const model_spec& spec, const param_vector& par) {
    (void)cut;
    const int nodes = p_ == 1 ? nq_ : nq_ * nq_;
    offe_.resize(edges_.size() + 1);
    offe_[0] = 0;
    for (size_t e = 0; e < edges_.size(); ++e) {
      const int ka = K_[edges_[e].a], kb = K_[edges_[e].b];
      offe_[e + 1] = offe_[e] + (edge_indep_[e] ? 0 : (ka + 1) * (kb + 1));
    }
    ce_.assign(static_cast<size_t>(offe_[edges_.size()]) * nodes, 0.0);

    for (size_t e = 0; e < edges_.size(); ++e) {
      if (edge_indep_[e]) continue;
      const int A = edges_[e].a, B = edges_[e].b;
      const auto& fam = spec.fam_tree[e];
      const double de = par.delta[e];
      const int kb1 = K_[B] + 1;
      auto put = [&](int ka, int kb, int node, double v) {
        ce_[(static_cast<size_t>(offe_[e]) + ka * kb1 + kb) * nodes + node] = v;
      };
      const bool zspace = fam.tag == family_tag::bvn || fam.tag == family_tag::student_t;
      std::vector<double> qa, qb;  // z- or t-quantiles of the endpoint values
      if (zspace) {
        qa.resize(static_cast<size_t>(K_[A] + 1) * nodes);
        qb.resize(static_cast<size_t>(kb1) * nodes);
        auto fill = [&](int item, int K, std::vector<double>& dst) {
          for (int k = 1; k < K; ++k)
            for (int node = 0; node < nodes; ++node) {
              const double u = fval(item, k, node);
              dst[static_cast<size_t>(k) * nodes + node] =
                  fam.tag == family_tag::bvn ? norm_quantile(u) : t_quantile(u, fam.dof);
            }
        };
        fill(A, K_[A], qa);
        fill(B, K_[B], qb);
      }
      for (int ka = 0; ka <= K_[A]; ++ka)
        for (int kb = 0; kb <= kb1 - 1; ++kb)
          for (int node = 0; node < nodes; ++node) {
            const double ua = fval(A, ka, node), ub = fval(B, kb, node);
            double v;
            if (ka == 0 || kb == 0) v = 0.0;
            else if (ka == K_[A]) v = ub;
            else if (kb == K_[B]) v = ua;
            else if (fam.tag == family_tag::bvn)
              v = bvn_cdf(qa[static_cast<size_t>(ka) * nodes + node],
                          qb[static_cast<size_t>(kb) * nodes + node], de);
            else if (fam.tag == family_tag::student_t)
              v = bvt_cdf(qa[static_cast<size_t>(ka) * nodes + node],
                          qb[static_cast<size_t>(kb) * nodes + node], de, fam.dof);
            else
              v = copula_cdf(fam, de, ua, ub);
            put(ka, kb, node, v);
          }
    }
  }

  void build_vine(const cutpoint_set& cut, const model_spec& spec, const param_vector& par) {
    pj_.resize(d_);
    for (int j = 0; j < d_; ++j) {
      pj_[j].resize(K_[j]);
      for (int y = 0; y < K_[j]; ++y) {
        pj_[j][y] = cut.a[j][y + 1] - cut.a[j][y];
        if (pj_[j][y] <= 0.0) throw std::domain_error("pmf: zero marginal cell");
      }
    }
    pe_.resize(edges_.size());
    for (size_t e = 0; e < edges_.size(); ++e) {
      const int A = edges_[e].a, B = edges_[e].b;
      if (edge_indep_[e]) continue;
      const auto& fam = spec.fam_tree[e];
      const double de = par.delta[e];
      const auto& aA = cut.a[A];
      const auto& aB = cut.a[B];
      std::vector<double> corner((K_[A] + 1) * (K_[B] + 1));
      for (int ka = 0; ka <= K_[A]; ++ka)
        for (int kb = 0; kb <= K_[B]; ++kb)
          corner[ka * (K_[B] + 1) + kb] = copula_cdf(fam, de, aA[ka], aB[kb]);
      pe_[e].resize(static_cast<size_t>(K_[A]) * K_[B]);
      for (int ya = 0; ya < K_[A]; ++ya)
        for (int yb = 0; yb < K_[B]; ++yb) {
          const int s = K_[B] + 1;
          const double rect = corner[(ya + 1) * s + yb + 1] - corner[ya * s + yb + 1] -
                              corner[(ya + 1) * s + yb] + corner[ya * s + yb];
          pe_[e][static_cast<size_t>(ya) * K_[B] + yb] = std::max(rect, 0.0);
        }
    }
  }

  double pmf_vine_impl(std::span<const int> y) const {
    double val = 1.0;
    for (int j = 0; j < d_; ++j) val *= pj_[j][y[j]];
    for (size_t e = 0; e < edges_.size(); ++e) {
      if (edge_indep_[e]) continue;
      const int A = edges_[e].a, B = edges_[e].b;
      val *= pe_[e][static_cast<size_t>(y[A]) * K_[B] + y[B]] / (pj_[A][y[A]] * pj_[B][y[B]]);
    }
    return val;
  }

  double node_product(std::span<const int> y, int node) const {
    double prod = 1.0;
    for (int j = 0; j < d_; ++j) {
      prod *= fval(j, y[j] + 1, node) - fval(j, y[j], node);
      if (prod <= 0.0) return 0.0;
    }
    for (size_t e = 0; e < edges_.size(); ++e) {
      if (edge_indep_[e]) continue;
      const int A = edges_[e].a, B = edges_[e].b;
      const int nodes = p_ == 1 ? nq_ : nq_ * nq_;
      const int kb1 = K_[B] + 1;
      auto cval = [&](int ka, int kb) {
        return ce_[(static_cast<size_t>(offe_[e]) + ka * kb1 + kb) * nodes + node];
      };
      const double rect = std::max(
          cval(y[A] + 1, y[B] + 1) - cval(y[A], y[B] + 1) - cval(y[A] + 1, y[B]) +
              cval(y[A], y[B]),
          0.0);
      const double fa = fval(A, y[A] + 1, node) - fval(A, y[A], node);
      const double fb = fval(B, y[B] + 1, node) - fval(B, y[B], node);
      const double den = fa * fb;
      if (den <= 0.0) return 0.0;
      prod *= rect / den;
    }
    return prod;
  }

  double pmf_f1_impl(std::span<const int> y) const {
    double total = 0.0;
    for (int q = 0; q < nq_; ++q) total += rule_.weights[q] * node_product(y, q);
    return total;
  }

  double pmf_f2_impl(std::span<const int> y) const {
    double total = 0.0;
    for (int q1 = 0; q1 < nq_; ++q1)
      for (int q2 = 0; q2 < nq_; ++q2)
        total += rule_.weights[q1] * rule_.weights[q2] * node_product(y, q1 * nq_ + q2);
    return total;
  }
};

// --- convenience single-outcome entry points ---

inline double pmf_1factor(const std::vector<int>& y, const cutpoint_set& cut,
                          const model_spec& spec, const param_vector& par,
                          const quadrature_rule& rule) {
  if (spec.factors != 1 || spec.tree)
    throw std::domain_error("pmf_1factor: spec must have p = 1 and no tree");
  return pmf_evaluator(cut, spec, par, rule).pmf(y);
}

inline double pmf_2factor(const std::vector<int>& y, const cutpoint_set& cut,
                          const model_spec& spec, const param_vector& par,
                          const quadrature_rule& rule) {
  if (spec.factors != 2 || spec.tree)
    throw std::domain_error("pmf_2factor: spec must have p = 2 and no tree");
  return pmf_evaluator(cut, spec, par, rule).pmf(y);
}

inline double pmf_vine(const std::vector<int>& y, const cutpoint_set& cut,
                       const model_spec& spec, const param_vector& par) {
  if (spec.factors != 0 || !spec.tree)
    throw std::domain_error("pmf_vine: spec must have p = 0 and a spanning tree");
  return pmf_evaluator(cut, spec, par, gauss_legendre_unit(2)).pmf(y);
}

inline double pmf_1factor_tree(const std::vector<int>& y, const cutpoint_set& cut,
                               const model_spec& spec, const param_vector& par,
                               const quadrature_rule& rule) {
  if (spec.factors != 1 || !spec.tree)
    throw std::domain_error("pmf_1factor_tree: spec must have p = 1 and a tree");
  return pmf_evaluator(cut, spec, par, rule).pmf(y);
}

inline double pmf_2factor_tree(const std::vector<int>& y, const cutpoint_set& cut,
                               const model_spec& spec, const param_vector& par,
                               const quadrature_rule& rule) {
  if (spec.factors != 2 || !spec.tree)
    throw std::domain_error("pmf_2factor_tree: spec must have p = 2 and a tree");
  return pmf_evaluator(cut, spec, par, rule).pmf(y);
}

// Unique rows with multiplicities; item-response data is heavily duplicated.
struct row_table {
  std::vector<std::vector<int>> rows;
  std::vector<int> counts;
  int n = 0;
  int d = 0;

  static row_table aggregate(const response_matrix& data) {
    std::map<std::vector<int>, int> uniq;
    std::vector<int> row(data.d);
    for (int i = 0; i < data.n; ++i) {
      for (int j = 0; j < data.d; ++j) row[j] = data.y(i, j);
      uniq[row]++;
    }
    row_table t;
    t.n = data.n;
    t.d = data.d;
    for (auto& [r, c] : uniq) {
      t.rows.push_back(r);
      t.counts.push_back(c);
    }
    return t;
  }
};

inline double loglik(const row_table& table, const cutpoint_set& cut, const model_spec& spec,
                     const param_vector& par, const quadrature_rule& rule) {
  const pmf_evaluator ev(cut, spec, par, rule);
  double ll = 0.0;
  for (size_t r = 0; r < table.rows.size(); ++r)
    ll += table.counts[r] * std::log(ev.pmf(table.rows[r]));
  return ll;
}

inline double loglik(const response_matrix& data, const cutpoint_set& cut,
                     const model_spec& spec, const param_vector& par,
                     const quadrature_rule& rule) {
  return loglik(row_table::aggregate(data), cut, spec, par, rule);
}

// Naive per-row evaluation; kept as the reference for the aggregation path.
inline double loglik_naive(const response_matrix& data, const cutpoint_set& cut,
                           const model_spec& spec, const param_vector& par,
                           const quadrature_rule& rule) {
  const pmf_evaluator ev(cut, spec, par, rule);
  std::vector<int> row(data.d);
  double ll = 0.0;
  for (int i = 0; i < data.n; ++i) {
    for (int j = 0; j < data.d; ++j) row[j] = data.y(i, j);
    ll += std::log(ev.pmf(row));
  }
  return ll;
}

}  // namespace ftcop
