#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ftcop/copula.hpp"
#include "ftcop/data.hpp"
#include "ftcop/model.hpp"

namespace ftcop {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// One stream per (seed, replicate): replications are independent and may
// run in parallel without sequence coordination. The uniform mapping is
// pinned to the bit pattern so identical seeds reproduce byte-for-byte.
struct rng_stream {
  std::mt19937_64 eng;

  explicit rng_stream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0xD1B54A32D192ED03ULL * (stream + 1);
    eng.seed(splitmix64(s));
  }

  double uniform() {  // (0,1)
    return (static_cast<double>(eng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
};

struct sim_design {
  std::string name;
  int n = 500;
  model_spec spec;
  param_vector params;
  cutpoint_set cut;
  std::uint64_t seed = 1;
  int replications = 1;
};

namespace detail {

// breadth-first traversal from the lowest-index node, neighbours ascending
struct tree_traversal {
  int root = 0;
  struct step {
    int parent, child, edge_index;
  };
  std::vector<step> steps;

  static tree_traversal make(const edge_set& es, int d) {
    tree_traversal t;
    std::vector<std::vector<std::pair<int, int>>> adj(d);  // (neighbour, edge idx)
    for (size_t e = 0; e < es.edges.size(); ++e) {
      adj[es.edges[e].a].push_back({es.edges[e].b, static_cast<int>(e)});
      adj[es.edges[e].b].push_back({es.edges[e].a, static_cast<int>(e)});
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    std::vector<bool> seen(d, false);
    std::vector<int> queue{t.root};
    seen[t.root] = true;
    for (size_t h = 0; h < queue.size(); ++h) {
      const int v = queue[h];
      for (auto [w, e] : adj[v])
        if (!seen[w]) {
          seen[w] = true;
          t.steps.push_back({v, w, e});
          queue.push_back(w);
        }
    }
    return t;
  }
};

}  // namespace detail

// Sample one ordinal dataset from the model. Given the latent factors the
// items form a discrete Markov tree: the root category comes from its
// conditional margin, every child from the discrete pair conditional given
// its parent's category (linear scan over the K conditional-cdf values).
// Note that drawing a continuous Markov tree of conditional-scale uniforms
// and discretising afterwards would NOT reproduce the model pmf, because
// coarsening the parent breaks conditional independence. Per respondent the
// draw order is: x1, x2 (if p = 2), one uniform for the root, then one per
// tree edge in breadth-first order from the lowest-index node; without a
// tree, one uniform per item in item order.
inline response_matrix draw(const sim_design& design, int replicate = 0) {
  const model_spec& spec = design.spec;
  const int d = design.cut.d();
  spec.validate(d);
  design.params.validate(spec);

  rng_stream rng(design.seed, static_cast<std::uint64_t>(replicate));
  const int p = spec.factors;
  detail::tree_traversal trav;
  if (spec.tree) trav = detail::tree_traversal::make(*spec.tree, d);

  response_matrix out;
  out.n = design.n;
  out.d = d;
  out.values.assign(static_cast<size_t>(out.n) * d, 0);
  out.category_counts.resize(d);
  for (int j = 0; j < d; ++j) out.category_counts[j] = design.cut.categories(j);
  for (int j = 0; j < d; ++j) out.item_names.push_back("item" + std::to_string(j + 1));

  for (int i = 0; i < out.n; ++i) {
    const double x1 = p >= 1 ? rng.uniform() : 0.0;
    const double x2 = p == 2 ? rng.uniform() : 0.0;
    // conditional-on-factors cdf of item j at the upper boundary of y
    auto level = [&](int j, int y) -> double {
      if (y < 0) return 0.0;
      if (y >= design.cut.categories(j) - 1) return 1.0;
      const double a = design.cut.a[j][y + 1];
      if (p == 0) return a;
      const double f1 = cond_cdf(
          spec.fam1[j], spec.fam1[j].has_parameter() ? design.params.theta1[j] : 0.0, a, x1);
      if (p == 1) return f1;
      return cond_cdf(spec.fam2[j],
                      spec.fam2[j].has_parameter() ? design.params.theta2[j] : 0.0,
                      clamp_unit(f1), x2);
    };
    auto invert_margin = [&](int j, double w) {
      int y = 0;
      while (y < design.cut.categories(j) - 1 && level(j, y) < w) ++y;
      return y;
    };
    if (spec.tree) {
      out.y(i, trav.root) = invert_margin(trav.root, rng.uniform());
      for (const auto& st : trav.steps) {
        const double w = rng.uniform();
        const int yp = out.y(i, st.parent);
        const double fpp = level(st.parent, yp);
        const double fpm = level(st.parent, yp - 1);
        const double fp = fpp - fpm;
        const int child = st.child;
        if (!(fp > 1e-280)) {  // vanishing parent cell at this latent point
          out.y(i, child) = invert_margin(child, w);
          continue;
        }
        const auto& fam = spec.fam_tree[st.edge_index];
        const double de = fam.has_parameter() ? design.params.delta[st.edge_index] : 0.0;
        auto cond_level = [&](int y) {
          const double fc = level(child, y);
          return (copula_cdf(fam, de, fpp, fc) - copula_cdf(fam, de, fpm, fc)) / fp;
        };
        int y = 0;
        while (y < design.cut.categories(child) - 1 && cond_level(y) < w) ++y;
        out.y(i, child) = y;
      }
    } else {
      for (int j = 0; j < d; ++j) out.y(i, j) = invert_margin(j, rng.uniform());
    }
  }
  return out;
}

inline std::vector<double> tau_grid(double hi, double lo, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i)
    g[i] = count == 1 ? hi : hi + (lo - hi) * i / (count - 1);
  return g;
}

namespace detail {

// uniform random labelled spanning tree via a random Prufer sequence
inline edge_set random_spanning_tree(int d, rng_stream& rng) {
  std::vector<int> code(d - 2);
  for (int& c : code) c = static_cast<int>(rng.eng() % d);
  std::vector<int> degree(d, 1);
  for (int v : code) degree[v]++;
  edge_set es;
  std::vector<bool> used(d, false);
  for (int v : code) {
    for (int leaf = 0; leaf < d; ++leaf)
      if (degree[leaf] == 1 && !used[leaf]) {
        es.edges.emplace_back(leaf, v);
        used[leaf] = true;
        degree[v]--;
        break;
      }
  }
  std::vector<int> rest;
  for (int v = 0; v < d; ++v)
    if (!used[v] && degree[v] == 1) rest.push_back(v);
  es.edges.emplace_back(rest[0], rest[1]);
  es.provenance = "uniform random spanning tree";
  return es;
}

}  // namespace detail

// The paper's Monte Carlo scenarios: n = 500, K = 5 equally weighted
// categories, Gumbel copulas everywhere, factor tau grids 0.70..0.40 and
// 0.55..0.25, residual-tree tau grid 0.40..0.10, with the residual tree
// either the ascending path ("drawable") or a random spanning tree
// ("regular", uniform law keyed by the design seed).
inline std::vector<sim_design> paper_designs(std::uint64_t seed = 20260801ULL) {
  std::vector<sim_design> designs;
  const copula_family gum = copula_family::gumbel();
  for (int d : {8, 16, 24}) {
    for (int p : {1, 2}) {
      for (const bool drawable : {true, false}) {
        sim_design ds;
        ds.n = 500;
        ds.seed = seed;
        ds.replications = 1000;
        ds.cut = cutpoint_set::equally_spaced(d, 5);
        edge_set tree;
        if (drawable) {
          for (int j = 0; j + 1 < d; ++j) tree.edges.emplace_back(j, j + 1);
          tree.provenance = "drawable (ascending path)";
        } else {
          rng_stream rng(seed ^ 0x7265677631ULL, static_cast<std::uint64_t>(d * 2 + p));
          tree = detail::random_spanning_tree(d, rng);
        }
        ds.spec = model_spec::factor(p, d, gum).with_tree(tree, gum);
        ds.params = param_vector::zeros_like(ds.spec);
        const auto g1 = tau_grid(0.70, 0.40, d);
        for (int j = 0; j < d; ++j) ds.params.theta1[j] = tau_to_theta(gum, g1[j]);
        if (p == 2) {
          const auto g2 = tau_grid(0.55, 0.25, d);
          for (int j = 0; j < d; ++j) ds.params.theta2[j] = tau_to_theta(gum, g2[j]);
        }
        const auto ge = tau_grid(0.40, 0.10, d - 1);
        for (int e = 0; e + 1 < d; ++e) ds.params.delta[e] = tau_to_theta(gum, ge[e]);
        ds.name = "d" + std::to_string(d) + "-" + std::to_string(p) + "ftree-" +
                  (drawable ? "drawable" : "regular");
        designs.push_back(std::move(ds));
      }
    }
  }
  return designs;
}

}  // namespace ftcop
