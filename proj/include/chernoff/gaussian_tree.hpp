#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/covariance.hpp"
#include "chernoff/errors.hpp"

namespace chernoff {

/// Weighted tree edge. Node ids are 1-based.
struct Edge {
  int i = 0;
  int j = 0;
  double w = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Normalized Gaussian tree: N unit-variance nodes and N-1 weighted edges.
/// The covariance between two nodes is the product of the weights along the
/// unique path joining them.
struct TreeSpec {
  int node_count = 0;
  std::vector<Edge> edges;

  bool operator==(const TreeSpec&) const = default;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

struct Neighbor {
  int node;  // 0-based
  double w;
};

using Adjacency = std::vector<std::vector<Neighbor>>;

inline Adjacency adjacency(const TreeSpec& spec) {
  Adjacency adj(static_cast<size_t>(spec.node_count));
  for (const auto& e : spec.edges) {
    adj[e.i - 1].push_back({e.j - 1, e.w});
    adj[e.j - 1].push_back({e.i - 1, e.w});
  }
  return adj;
}

inline std::string edge_name(const Edge& e) {
  return "(" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
}

}  // namespace detail

/// Returns `spec` when it describes a spanning tree on {1..N} with |w| < 1 for
/// every edge; throws otherwise. Zero weights are legal but reported through
/// `warnings` when a sink is supplied.
inline TreeSpec validate_tree(TreeSpec spec,
                              std::vector<std::string>* warnings = nullptr) {
  const int n = spec.node_count;
  if (n < 1) {
    throw InvalidNode("node count must be >= 1, got " + std::to_string(n));
  }
  for (const auto& e : spec.edges) {
    if (e.i < 1 || e.i > n || e.j < 1 || e.j > n) {
      throw InvalidNode("edge " + detail::edge_name(e) +
                        " references a node outside 1.." + std::to_string(n));
    }
    if (e.i == e.j) {
      throw CycleError("self-loop on node " + std::to_string(e.i));
    }
    if (!std::isfinite(e.w) || std::abs(e.w) >= 1.0) {
      throw WeightOutOfRange("edge " + detail::edge_name(e) + " has weight " +
                             std::to_string(e.w) + "; need |w| < 1");
    }
  }
  for (size_t a = 0; a < spec.edges.size(); ++a) {
    for (size_t b = a + 1; b < spec.edges.size(); ++b) {
      const auto& x = spec.edges[a];
      const auto& y = spec.edges[b];
      if ((x.i == y.i && x.j == y.j) || (x.i == y.j && x.j == y.i)) {
        throw DuplicateEdge("edge " + detail::edge_name(x) +
                            " appears more than once");
      }
    }
  }
  detail::DisjointSets sets(n);
  for (const auto& e : spec.edges) {
    if (!sets.unite(e.i - 1, e.j - 1)) {
      throw CycleError("edge " + detail::edge_name(e) + " closes a cycle");
    }
  }
  if (static_cast<int>(spec.edges.size()) != n - 1) {
    throw DisconnectedError("tree on " + std::to_string(n) + " nodes has " +
                            std::to_string(spec.edges.size()) +
                            " edges; the graph is disconnected");
  }
  if (warnings != nullptr) {
    for (const auto& e : spec.edges) {
      if (e.w == 0.0) {
        warnings->push_back("edge " + detail::edge_name(e) +
                            " has weight 0: the two sides are independent");
      }
    }
  }
  return spec;
}

/// sigma_ij = product of edge weights along the path i..j, sigma_ii = 1.
/// Each source node runs one traversal, so construction is O(N^2); entries
/// below the diagonal are mirrored so the result is exactly symmetric.
inline CovarianceMatrix build_covariance(const TreeSpec& spec) {
  validate_tree(spec);
  const int n = spec.node_count;
  const auto adj = detail::adjacency(spec);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(n, n);

  struct Frame {
    int node;
    int parent;
    double product;
  };
  std::vector<Frame> stack;
  for (int source = 0; source < n; ++source) {
    stack.clear();
    stack.push_back({source, -1, 1.0});
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      if (f.node > source) {
        sigma(source, f.node) = f.product;
        sigma(f.node, source) = f.product;
      }
      for (const auto& nb : adj[f.node]) {
        if (nb.node != f.parent) stack.push_back({nb.node, f.node, f.product * nb.w});
      }
    }
  }
  return CovarianceMatrix(sigma);
}

/// Closed-form inverse of build_covariance(spec): tridiagonal-like sparsity
/// following the tree edges.
inline CovarianceMatrix tree_precision(const TreeSpec& spec) {
  validate_tree(spec);
  const int n = spec.node_count;
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n);
  for (const auto& e : spec.edges) {
    const double denom = 1.0 - e.w * e.w;
    const int a = e.i - 1;
    const int b = e.j - 1;
    u(a, b) = -e.w / denom;
    u(b, a) = -e.w / denom;
    u(a, a) += e.w * e.w / denom;
    u(b, b) += e.w * e.w / denom;
  }
  return CovarianceMatrix(u);
}

/// |Sigma| = prod over edges of (1 - w^2).
inline double tree_determinant(const TreeSpec& spec) {
  validate_tree(spec);
  double det = 1.0;
  for (const auto& e : spec.edges) det *= 1.0 - e.w * e.w;
  return det;
}

}  // namespace chernoff
