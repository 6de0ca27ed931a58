#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ftcop/copula.hpp"

namespace ftcop {

struct edge {
  int a = 0, b = 0;  // 0-based item indices

  edge() = default;
  edge(int a_, int b_) : a(std::min(a_, b_)), b(std::max(a_, b_)) {
    if (a == b) throw std::domain_error("edge: self loop");
  }
  bool operator==(const edge& o) const { return a == o.a && b == o.b; }
  bool operator<(const edge& o) const { return a != o.a ? a < o.a : b < o.b; }
};

// d-1 unordered item pairs forming a spanning tree on d nodes.
struct edge_set {
  std::vector<edge> edges;
  std::string provenance;  // which algorithm produced it

  int size() const { return static_cast<int>(edges.size()); }
};

inline bool is_spanning_tree(const edge_set& es, int d) {
  if (es.size() != d - 1) return false;
  std::vector<int> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : es.edges) {
    if (e.a < 0 || e.b >= d) return false;
    const int ra = find(e.a), rb = find(e.b);
    if (ra == rb) return false;  // cycle
    parent[ra] = rb;
  }
  return true;
}

inline std::vector<std::vector<int>> tree_adjacency(const edge_set& es, int d) {
  std::vector<std::vector<int>> adj(d);
  for (const auto& e : es.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

// Unique path j -> k in the tree, returned as the visited edges.
inline std::vector<edge> tree_path(const edge_set& es, int d, int j, int k) {
  const auto adj = tree_adjacency(es, d);
  std::vector<int> prev(d, -1);
  std::vector<int> stack{j};
  prev[j] = j;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == k) break;
    for (int w : adj[v])
      if (prev[w] < 0) {
        prev[w] = v;
        stack.push_back(w);
      }
  }
  if (prev[k] < 0) throw std::logic_error("tree_path: nodes not connected");
  std::vector<edge> path;
  for (int v = k; v != j; v = prev[v]) path.emplace_back(prev[v], v);
  std::reverse(path.begin(), path.end());
  return path;
}

// Structure of a factor tree copula model: p factors, per-link families,
// optional 1-truncated residual vine with per-edge families.
struct model_spec {
  int factors = 0;  // p in {0,1,2}
  std::vector<copula_family> fam1;       // item <-> X1 links (p >= 1)
  std::vector<copula_family> fam2;       // item <-> X2 links (p = 2)
  std::optional<edge_set> tree;
  std::vector<copula_family> fam_tree;   // per edge of the tree

  int d() const {
    if (factors >= 1) return static_cast<int>(fam1.size());
    return tree ? tree->size() + 1 : 0;
  }

  bool has_tree() const { return tree.has_value(); }

  void validate(int data_d) const {
    if (factors < 0 || factors > 2)
      throw std::domain_error("model_spec: factor count must be 0, 1 or 2");
    if (factors == 0 && !tree)
      throw std::domain_error("model_spec: p = 0 requires a residual tree");
    if (factors >= 1 && static_cast<int>(fam1.size()) != data_d)
      throw std::domain_error("model_spec: fam1 must have one family per item");
    if (factors == 2 && static_cast<int>(fam2.size()) != data_d)
      throw std::domain_error("model_spec: fam2 must have one family per item");
    if (factors < 2 && !fam2.empty())
      throw std::domain_error("model_spec: fam2 present without a second factor");
    if (tree) {
      if (!is_spanning_tree(*tree, data_d))
        throw std::domain_error("model_spec: tree is not a spanning tree");
      if (static_cast<int>(fam_tree.size()) != tree->size())
        throw std::domain_error("model_spec: fam_tree must have one family per edge");
    } else if (!fam_tree.empty()) {
      throw std::domain_error("model_spec: fam_tree present without a tree");
    }
  }

  // p-factor model, one family across all links (and optionally a tree).
  static model_spec factor(int p, int d, copula_family f1,
                           copula_family f2 = copula_family::bvn()) {
    model_spec s;
    s.factors = p;
    if (p >= 1) s.fam1.assign(d, f1);
    if (p == 2) s.fam2.assign(d, f2);
    return s;
  }

  model_spec with_tree(edge_set es, copula_family fe) const {
    model_spec s = *this;
    s.tree = std::move(es);
    s.fam_tree.assign(s.tree->size(), fe);
    return s;
  }
};

// Copula parameters theta1/theta2/delta; entries for independence links are
// carried as zeros and ignored.
struct param_vector {
  std::vector<double> theta1, theta2, delta;

  static param_vector zeros_like(const model_spec& spec) {
    param_vector p;
    p.theta1.assign(spec.fam1.size(), 0.0);
    p.theta2.assign(spec.fam2.size(), 0.0);
    p.delta.assign(spec.fam_tree.size(), 0.0);
    return p;
  }

  void validate(const model_spec& spec) const {
    auto check_block = [](const std::vector<copula_family>& fams,
                          const std::vector<double>& th, const char* what) {
      if (fams.size() != th.size())
        throw std::domain_error(std::string("param_vector: ") + what + " size mismatch");
      for (size_t i = 0; i < fams.size(); ++i)
        if (fams[i].has_parameter()) check_param(fams[i], th[i]);
    };
    check_block(spec.fam1, theta1, "theta1");
    check_block(spec.fam2, theta2, "theta2");
    check_block(spec.fam_tree, delta, "delta");
  }
};

inline bool all_bvn_or_independence(const model_spec& spec) {
  auto ok = [](const std::vector<copula_family>& fams) {
    return std::all_of(fams.begin(), fams.end(), [](const copula_family& f) {
      return f.tag == family_tag::bvn || f.tag == family_tag::independence;
    });
  };
  return ok(spec.fam1) && ok(spec.fam2) && ok(spec.fam_tree);
}

inline bool all_bvn_links(const model_spec& spec) {
  auto bvn = [](const std::vector<copula_family>& fams) {
    return std::all_of(fams.begin(), fams.end(),
                       [](const copula_family& f) { return f.tag == family_tag::bvn; });
  };
  return bvn(spec.fam1) && bvn(spec.fam2) && bvn(spec.fam_tree);
}

// Gaussian 2-factor models are rotation-unidentified; fix one second-factor
// link to independence. item = -1 picks the last item.
inline model_spec apply_identification(model_spec spec, int item = -1) {
  if (spec.factors != 2 || !all_bvn_links(spec)) return spec;
  const int d = static_cast<int>(spec.fam2.size());
  spec.fam2[item < 0 ? d - 1 : item] = copula_family::independence();
  return spec;
}

inline int count_parameters(const model_spec& spec) {
  auto cnt = [](const std::vector<copula_family>& fams) {
    return static_cast<int>(std::count_if(fams.begin(), fams.end(),
                                          [](const copula_family& f) { return f.has_parameter(); }));
  };
  return cnt(spec.fam1) + cnt(spec.fam2) + cnt(spec.fam_tree);
}

}  // namespace ftcop
