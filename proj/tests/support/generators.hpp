#pragma once

// Seeded random inputs for property tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/chernoff.hpp"

namespace testgen {

using chernoff::Edge;
using chernoff::GraftOp;
using chernoff::TreeSpec;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// |w| in [0.05, 0.95] with a random sign.
inline double edge_weight(Rng& rng) {
  const double mag = uniform(rng, 0.05, 0.95);
  return uniform_int(rng, 0, 1) == 0 ? mag : -mag;
}

/// Uniform random recursive tree under a random relabelling.
inline TreeSpec random_tree(Rng& rng, int n) {
  std::vector<int> label(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) label[k] = k + 1;
  std::shuffle(label.begin(), label.end(), rng);
  TreeSpec t{n, {}};
  for (int k = 1; k < n; ++k) {
    t.edges.push_back({label[k], label[uniform_int(rng, 0, k - 1)], edge_weight(rng)});
  }
  return t;
}

inline Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

/// A A^T / n + 0.1 I: well conditioned but far from diagonal.
inline Eigen::MatrixXd random_spd(Rng& rng, int n) {
  const Eigen::MatrixXd a = gaussian_matrix(rng, n, n);
  Eigen::MatrixXd s = a * a.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

/// Gaussian matrix redrawn until its condition number is below 1e3.
inline Eigen::MatrixXd random_invertible(Rng& rng, int n) {
  for (;;) {
    const Eigen::MatrixXd k = gaussian_matrix(rng, n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) > 0.0 && sv(0) / sv(n - 1) < 1e3) return k;
  }
}

/// Two random trees on the same node set (independent structures).
inline std::pair<TreeSpec, TreeSpec> random_tree_pair(Rng& rng, int n) {
  return {random_tree(rng, n), random_tree(rng, n)};
}

/// Pair sharing one edge {p, q} with identical weight, so division applies.
struct DivisionCase {
  std::pair<TreeSpec, TreeSpec> pair;
  int p = 0;
  int q = 0;
  double w1 = 0.0;
  double w2 = 0.0;
};

inline DivisionCase random_division_case(Rng& rng, int n) {
  DivisionCase c;
  c.pair = random_tree_pair(rng, n);
  auto& [t1, t2] = c.pair;
  const auto& shared = t1.edges[static_cast<size_t>(uniform_int(rng, 0, n - 2))];
  c.p = shared.i;
  c.q = shared.j;
  // Put {p, q} into t2 too: drop the t2 edge on the p..q path that is
  // nearest q's side and add {p, q} with the same weight.
  const int existing = chernoff::detail::find_edge(t2, c.p, c.q);
  if (existing >= 0) {
    t2.edges[static_cast<size_t>(existing)].w = shared.w;
  } else {
    const auto path = chernoff::detail::tree_path(t2, c.p, c.q);  // q ... p, 0-based
    const int a = path[0] + 1;
    const int b = path[1] + 1;
    const int k = chernoff::detail::find_edge(t2, a, b);
    t2.edges[static_cast<size_t>(k)] = {c.p, c.q, shared.w};
  }
  // Split |w| = |w1 w2| with both factors inside (-1, 1).
  const double w = shared.w;
  const double lo = std::abs(w);
  const double mag1 = std::pow(lo, uniform(rng, 0.2, 0.8));
  c.w1 = uniform_int(rng, 0, 1) == 0 ? mag1 : -mag1;
  c.w2 = w / c.w1;
  return c;
}

/// Grafting chain built on an explicit star decomposition: a 1..3 node center
/// and 2..4 super leaves. Each op consumes one or two unused leaves, so the
/// chain is independent by construction.
struct StarChain {
  TreeSpec base;
  std::vector<GraftOp> ops;
  std::vector<int> types;  // 1 within leaf, 2 center moved, 3 across leaves
};

inline std::optional<StarChain> try_star_chain(Rng& rng, int max_nodes = 12, int max_ops = 4) {
  struct E0 {
    int a, b;
    double w;
  };
  std::vector<E0> edges;
  const int nc = uniform_int(rng, 1, 3);
  int n = nc;
  for (int k = 1; k < nc; ++k) edges.push_back({k, uniform_int(rng, 0, k - 1), uniform(rng, -0.9, 0.9)});
  const int nleaves = uniform_int(rng, 2, 4);
  std::vector<std::vector<int>> leaves;
  for (int l = 0; l < nleaves; ++l) {
    const int size = uniform_int(rng, 1, 3);
    std::vector<int> nodes{n};
    edges.push_back({n, uniform_int(rng, 0, nc - 1), uniform(rng, -0.9, 0.9)});
    ++n;
    for (int s = 1; s < size; ++s) {
      edges.push_back({n, nodes[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(nodes.size()) - 1))],
                       uniform(rng, -0.9, 0.9)});
      nodes.push_back(n);
      ++n;
    }
    leaves.push_back(nodes);
  }
  if (n > max_nodes) return std::nullopt;

  StarChain out;
  out.base.node_count = n;
  for (const auto& e : edges) out.base.edges.push_back({e.a + 1, e.b + 1, e.w});

  std::vector<size_t> free(leaves.size());
  for (size_t k = 0; k < free.size(); ++k) free[k] = k;
  std::shuffle(free.begin(), free.end(), rng);

  TreeSpec current = out.base;
  auto pick = [&](const std::vector<int>& v) {
    return v[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(v.size()) - 1))];
  };
  while (!free.empty() && static_cast<int>(out.ops.size()) < max_ops) {
    int type = uniform_int(rng, 1, 3);
    if (type == 3 && free.size() < 2) type = uniform_int(rng, 1, 2);
    const auto& la = leaves[free.back()];
    if (la.size() < 2) {
      free.pop_back();
      continue;
    }
    if (type == 1 && la.size() < 3) type = 2;

    // Parents in the current tree rooted at center node 0.
    const auto adj = chernoff::detail::adjacency(current);
    std::vector<int> parent(static_cast<size_t>(n), -2);
    parent[0] = -1;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& nb : adj[u]) {
        if (parent[nb.node] == -2) {
          parent[nb.node] = u;
          stack.push_back(nb.node);
        }
      }
    }
    const std::set<int> in_leaf(la.begin(), la.end());
    std::vector<int> inner;  // leaf nodes whose parent is in the same leaf
    for (int v : la) {
      if (in_leaf.count(parent[v]) > 0) inner.push_back(v);
    }
    int i = 0, p = 0, q = 0;
    if (type == 2) {
      int root = -1;
      for (int v : la) {
        if (in_leaf.count(parent[v]) == 0) root = v;
      }
      std::vector<int> others;
      for (int v : la) {
        if (v != root) others.push_back(v);
      }
      i = parent[root];
      p = root;
      q = pick(others);
    } else if (type == 1) {
      i = pick(inner);
      p = parent[i];
      const auto moved = chernoff::detail::side_of(current, i + 1, p + 1);
      std::vector<int> targets;
      for (int v : la) {
        if (!moved[v] && v != p) targets.push_back(v);
      }
      if (targets.empty()) {
        free.pop_back();
        continue;
      }
      q = pick(targets);
    } else {
      const auto& lb = leaves[free[free.size() - 2]];
      i = pick(inner);
      p = parent[i];
      q = pick(lb);
    }
    const int k = chernoff::detail::find_edge(current, i + 1, p + 1);
    const GraftOp op{i + 1, p + 1, q + 1, current.edges[static_cast<size_t>(k)].w};
    current = chernoff::apply_graft(current, op);
    out.ops.push_back(op);
    out.types.push_back(type);
    free.pop_back();
    if (type == 3) free.pop_back();
  }
  if (out.ops.empty()) return std::nullopt;
  return out;
}

inline StarChain star_chain(Rng& rng, int max_nodes = 12, int max_ops = 4) {
  for (;;) {
    if (auto c = try_star_chain(rng, max_nodes, max_ops)) return *c;
  }
}

/// Seven-node chain whose two grafts share a super leaf; CI(T1||T3) falls
/// below CI(T1||T2).
inline chernoff::GraftChain dependent_chain() {
  TreeSpec base{7,
                {{2, 1, 0.944}, {3, 1, 0.418}, {4, 1, 0.925}, {5, 4, -0.89},
                 {6, 5, -0.297}, {7, 3, -0.084}}};
  std::vector<GraftOp> ops{{4, 5, 6, -0.89}, {5, 6, 2, -0.297}};
  return chernoff::GraftChain(base, ops);
}

}  // namespace testgen
