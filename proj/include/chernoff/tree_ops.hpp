#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/covariance.hpp"
#include "chernoff/divergence.hpp"
#include "chernoff/errors.hpp"
#include "chernoff/gaussian_tree.hpp"

namespace chernoff {

using TreePair = std::pair<TreeSpec, TreeSpec>;

namespace detail {

inline constexpr double kWeightMatchTolerance = 1e-12;

inline void require_node(const TreeSpec& t, int node, const char* what) {
  if (node < 1 || node > t.node_count) {
    throw InvalidNode(std::string(what) + " " + std::to_string(node) +
                      " is outside 1.." + std::to_string(t.node_count));
  }
}

inline void require_weight(double w) {
  if (!std::isfinite(w) || std::abs(w) >= 1.0) {
    throw WeightOutOfRange("weight " + std::to_string(w) + " needs |w| < 1");
  }
}

/// Index of edge {a, b} in t.edges, or -1.
inline int find_edge(const TreeSpec& t, int a, int b) {
  for (size_t k = 0; k < t.edges.size(); ++k) {
    const auto& e = t.edges[k];
    if ((e.i == a && e.j == b) || (e.i == b && e.j == a)) return static_cast<int>(k);
  }
  return -1;
}

/// Nodes (0-based flags) reachable from `from` without using edge {from, cut}.
inline std::vector<bool> side_of(const TreeSpec& t, int from, int cut) {
  const auto adj = adjacency(t);
  std::vector<bool> seen(static_cast<size_t>(t.node_count), false);
  std::vector<int> stack{from - 1};
  seen[from - 1] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& nb : adj[u]) {
      if (u == from - 1 && nb.node == cut - 1) continue;
      if (!seen[nb.node]) {
        seen[nb.node] = true;
        stack.push_back(nb.node);
      }
    }
  }
  return seen;
}

/// Connected-component label per node of t with `removed` nodes deleted;
/// removed nodes get -1.
inline std::vector<int> components_without(const TreeSpec& t,
                                           const std::vector<bool>& removed) {
  const auto adj = adjacency(t);
  std::vector<int> label(static_cast<size_t>(t.node_count), -1);
  int next = 0;
  for (int s = 0; s < t.node_count; ++s) {
    if (removed[s] || label[s] >= 0) continue;
    label[s] = next;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& nb : adj[u]) {
        if (!removed[nb.node] && label[nb.node] < 0) {
          label[nb.node] = next;
          stack.push_back(nb.node);
        }
      }
    }
    ++next;
  }
  return label;
}

/// 0-based nodes on the tree path a..b (1-based inputs), endpoints included.
inline std::vector<int> tree_path(const TreeSpec& t, int a, int b) {
  const auto adj = adjacency(t);
  std::vector<int> parent(static_cast<size_t>(t.node_count), -2);
  std::vector<int> stack{a - 1};
  parent[a - 1] = -1;
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
  std::vector<int> path;
  for (int v = b - 1; v >= 0; v = parent[v]) path.push_back(v);
  return path;
}

}  // namespace detail

/// Attaches the same new leaf N+1 to node `attach_node` with weight w in both
/// trees of the pair.
inline TreePair adding_operation(const TreePair& pair, int attach_node, double w) {
  validate_tree(pair.first);
  validate_tree(pair.second);
  if (pair.first.node_count != pair.second.node_count) {
    throw DimensionMismatch("adding operation needs trees of equal size");
  }
  detail::require_node(pair.first, attach_node, "attach node");
  detail::require_weight(w);
  TreePair out = pair;
  const int leaf = pair.first.node_count + 1;
  for (TreeSpec* t : {&out.first, &out.second}) {
    t->node_count = leaf;
    t->edges.push_back({attach_node, leaf, w});
  }
  return out;
}

/// Splits the shared edge (p, q), whose weight must equal w1 * w2 in both
/// trees, into (p, N+1, w1) and (N+1, q, w2).
inline TreePair division_operation(const TreePair& pair, int p, int q, double w1,
                                   double w2) {
  validate_tree(pair.first);
  validate_tree(pair.second);
  if (pair.first.node_count != pair.second.node_count) {
    throw DimensionMismatch("division operation needs trees of equal size");
  }
  detail::require_weight(w1);
  detail::require_weight(w2);
  const int k1 = detail::find_edge(pair.first, p, q);
  const int k2 = detail::find_edge(pair.second, p, q);
  const std::string name = "(" + std::to_string(p) + "," + std::to_string(q) + ")";
  if (k1 < 0 || k2 < 0) {
    throw EdgeNotShared("edge " + name + " is not present in both trees");
  }
  const double shared = pair.first.edges[k1].w;
  if (std::abs(shared - pair.second.edges[k2].w) > detail::kWeightMatchTolerance) {
    throw EdgeNotShared("edge " + name + " has different weights in the two trees");
  }
  if (std::abs(w1 * w2 - shared) > detail::kWeightMatchTolerance) {
    throw WeightFactorMismatch("w1 * w2 = " + std::to_string(w1 * w2) +
                               " does not equal the shared weight " +
                               std::to_string(shared));
  }
  TreePair out = pair;
  const int mid = pair.first.node_count + 1;
  for (auto [t, k] : {std::pair{&out.first, k1}, std::pair{&out.second, k2}}) {
    t->node_count = mid;
    t->edges[k] = {p, mid, w1};
    t->edges.push_back({mid, q, w2});
  }
  return out;
}

/// Cut edge (subtree_root, old_neighbor) and re-attach the subtree_root side at
/// new_neighbor with the same weight.
struct GraftOp {
  int subtree_root = 0;
  int old_neighbor = 0;
  int new_neighbor = 0;
  double weight = 0.0;

  bool operator==(const GraftOp&) const = default;

  GraftOp inverse() const { return {subtree_root, new_neighbor, old_neighbor, weight}; }
};

/// The replaced edge keeps its slot in the edge list, so applying op.inverse()
/// restores the original TreeSpec exactly.
inline TreeSpec apply_graft(const TreeSpec& tree, const GraftOp& op) {
  validate_tree(tree);
  detail::require_node(tree, op.subtree_root, "subtree root");
  detail::require_node(tree, op.old_neighbor, "old neighbor");
  detail::require_node(tree, op.new_neighbor, "new neighbor");
  const int k = detail::find_edge(tree, op.subtree_root, op.old_neighbor);
  const std::string name = "(" + std::to_string(op.subtree_root) + "," +
                           std::to_string(op.old_neighbor) + ")";
  if (k < 0) throw EdgeNotFound("edge " + name + " does not exist");
  if (std::abs(tree.edges[k].w - op.weight) > detail::kWeightMatchTolerance) {
    throw EdgeNotFound("edge " + name + " has weight " + std::to_string(tree.edges[k].w) +
                       ", not " + std::to_string(op.weight));
  }
  const auto moved = detail::side_of(tree, op.subtree_root, op.old_neighbor);
  if (moved[op.new_neighbor - 1]) {
    throw WouldCreateCycle("new neighbor " + std::to_string(op.new_neighbor) +
                           " lies inside the moved subtree");
  }
  TreeSpec out = tree;
  // Keep the endpoint order so the inverse op restores the edge verbatim.
  if (tree.edges[k].i == op.subtree_root) {
    out.edges[k] = {op.subtree_root, op.new_neighbor, tree.edges[k].w};
  } else {
    out.edges[k] = {op.new_neighbor, op.subtree_root, tree.edges[k].w};
  }
  return out;
}

/// T_1 = base, T_{k+1} = apply_graft(T_k, ops[k]). Ops are applied left to
/// right; every tree shares the node count and the edge-weight multiset.
class GraftChain {
 public:
  GraftChain(TreeSpec base, std::vector<GraftOp> ops)
      : ops_(std::move(ops)) {
    trees_.push_back(validate_tree(std::move(base)));
    for (const auto& op : ops_) trees_.push_back(apply_graft(trees_.back(), op));
  }

  const TreeSpec& base() const { return trees_.front(); }
  const std::vector<GraftOp>& ops() const { return ops_; }
  const std::vector<TreeSpec>& trees() const { return trees_; }
  size_t size() const { return trees_.size(); }

 private:
  std::vector<GraftOp> ops_;
  std::vector<TreeSpec> trees_;
};

enum class GraftType {
  within_leaf = 1,     // moved subtree stays inside one super leaf
  center_moved = 2,    // the side holding the center is re-attached inside a leaf
  across_leaves = 3,   // moved subtree changes super leaf
};

struct IndependenceReport {
  bool independent = false;
  /// 1-based nodes of the unchanged center subtree (empty when none was found).
  std::vector<int> center;
  /// Graft type of each op relative to `center` (only when independent).
  std::vector<GraftType> op_types;
  /// 0-based op index pairs that share a super leaf.
  std::vector<std::pair<size_t, size_t>> conflicts;
  std::vector<std::string> notes;
};

/// Star-decomposition test. A center C is a connected set of nodes avoiding
/// every op's old and new neighbor; the super leaves are the components of
/// T - C. The chain is independent when some C lets every op be charged to
/// super leaves (tracked by their nodes in the base tree) that no other op
/// touches. Only components of T minus all anchor nodes need to be tried:
/// enlarging C refines the super leaves and never creates a conflict.
///
/// Conservative: chains whose ops compose into fewer effective grafts can be
/// rejected even though their trace condition vanishes.
inline IndependenceReport is_independent_chain(const GraftChain& chain) {
  IndependenceReport report;
  const auto& ops = chain.ops();
  const int n = chain.base().node_count;
  if (ops.size() <= 1) {
    report.independent = true;
    report.notes.push_back(ops.empty() ? "no grafting operations"
                                       : "a single grafting operation is independent");
    if (ops.size() == 1) {
      // The subtree root's side minus the anchors serves as the center.
      std::vector<bool> anchors(static_cast<size_t>(n), false);
      anchors[ops[0].old_neighbor - 1] = anchors[ops[0].new_neighbor - 1] = true;
      const auto comp = detail::components_without(chain.base(), anchors);
      for (int v = 0; v < n; ++v) {
        if (comp[v] == comp[ops[0].subtree_root - 1]) report.center.push_back(v + 1);
      }
      report.op_types.push_back(GraftType::center_moved);
    }
    return report;
  }

  std::vector<bool> anchors(static_cast<size_t>(n), false);
  for (const auto& op : ops) {
    anchors[op.old_neighbor - 1] = true;
    anchors[op.new_neighbor - 1] = true;
  }
  const auto center_label = detail::components_without(chain.base(), anchors);
  const int candidates = center_label.empty()
                             ? 0
                             : *std::max_element(center_label.begin(), center_label.end()) + 1;

  std::vector<std::pair<size_t, size_t>> best_conflicts;
  bool have_best = false;
  for (int c = 0; c < candidates; ++c) {
    std::vector<bool> in_center(static_cast<size_t>(n), false);
    for (int v = 0; v < n; ++v) in_center[v] = center_label[v] == c;

    const auto base_leaf = detail::components_without(chain.base(), in_center);
    std::vector<std::set<int>> claims;
    std::vector<GraftType> types;
    for (size_t k = 0; k < ops.size(); ++k) {
      const auto& op = ops[k];
      const auto leaf = detail::components_without(chain.trees()[k], in_center);
      std::set<int> claim;
      for (int anchor : {op.old_neighbor - 1, op.new_neighbor - 1}) {
        for (int v = 0; v < n; ++v) {
          if (leaf[v] == leaf[anchor]) claim.insert(base_leaf[v]);
        }
      }
      claims.push_back(std::move(claim));
      if (in_center[op.subtree_root - 1]) {
        types.push_back(GraftType::center_moved);
      } else if (leaf[op.old_neighbor - 1] == leaf[op.new_neighbor - 1]) {
        types.push_back(GraftType::within_leaf);
      } else {
        types.push_back(GraftType::across_leaves);
      }
    }
    std::vector<std::pair<size_t, size_t>> conflicts;
    for (size_t a = 0; a < claims.size(); ++a) {
      for (size_t b = a + 1; b < claims.size(); ++b) {
        const bool overlap = std::any_of(claims[a].begin(), claims[a].end(),
                                         [&](int x) { return claims[b].count(x) > 0; });
        if (overlap) conflicts.emplace_back(a, b);
      }
    }
    if (conflicts.empty()) {
      report.independent = true;
      for (int v = 0; v < n; ++v) {
        if (in_center[v]) report.center.push_back(v + 1);
      }
      report.op_types = std::move(types);
      return report;
    }
    if (!have_best || conflicts.size() < best_conflicts.size()) {
      best_conflicts = std::move(conflicts);
      have_best = true;
    }
  }

  if (have_best) {
    report.conflicts = std::move(best_conflicts);
    report.notes.push_back("every candidate center leaves some super leaf shared by two operations");
    return report;
  }
  // No node avoids all anchors: fall back to overlapping touched regions
  // ({root, old, new} plus the old..new path).
  report.notes.push_back("no node is free of grafting anchors, so no unchanged center exists");
  std::vector<std::set<int>> touched;
  for (size_t k = 0; k < ops.size(); ++k) {
    const auto& op = ops[k];
    auto path = detail::tree_path(chain.trees()[k], op.old_neighbor, op.new_neighbor);
    std::set<int> s(path.begin(), path.end());
    s.insert(op.subtree_root - 1);
    touched.push_back(std::move(s));
  }
  for (size_t a = 0; a < touched.size(); ++a) {
    for (size_t b = a + 1; b < touched.size(); ++b) {
      const bool overlap = std::any_of(touched[a].begin(), touched[a].end(),
                                       [&](int x) { return touched[b].count(x) > 0; });
      if (overlap) report.conflicts.emplace_back(a, b);
    }
  }
  return report;
}

/// tr(Sigma_{1/2} (Sigma1^-1 - Sigma2^-1)). With |Sigma1| = |Sigma2| it is zero
/// exactly when lambda* = 1/2.
inline double trace_condition(const CovarianceMatrix& sigma1,
                              const CovarianceMatrix& sigma2,
                              double determinant_tolerance = 1e-9) {
  require_same_dim(sigma1, sigma2);
  const double gap = std::abs(sigma1.log_determinant() - sigma2.log_determinant());
  if (gap > determinant_tolerance) {
    throw DeterminantMismatch("determinants differ (|log det ratio| = " +
                              std::to_string(gap) + ")");
  }
  const Eigen::MatrixXd p1 = sigma1.inverse();
  const Eigen::MatrixXd p2 = sigma2.inverse();
  const auto half = sigma_lambda(sigma1, sigma2, 0.5);
  return (half.matrix() * (p1 - p2)).trace();
}

/// Pairwise CI and lambda* over all trees of a chain. Both matrices are
/// symmetric in CI; lambda_star(j, i) = 1 - lambda_star(i, j).
struct PairwiseChernoff {
  Eigen::MatrixXd ci;
  Eigen::MatrixXd lambda_star;
};

inline PairwiseChernoff chain_pairwise(const GraftChain& chain,
                                       const LambdaStarOptions& options = {}) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  std::vector<CovarianceMatrix> covs;
  covs.reserve(chain.size());
  for (const auto& t : chain.trees()) covs.push_back(build_covariance(t));
  PairwiseChernoff out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Constant(n, n, 0.5)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto r = chernoff_information(covs[i], covs[j], options);
      out.ci(i, j) = out.ci(j, i) = r.ci;
      out.lambda_star(i, j) = r.lambda_star;
      out.lambda_star(j, i) = 1.0 - r.lambda_star;
    }
  }
  return out;
}

inline Eigen::MatrixXd chain_ci_matrix(const GraftChain& chain,
                                       const LambdaStarOptions& options = {}) {
  return chain_pairwise(chain, options).ci;
}

struct OrderingOptions {
  double slack = 1e-9;
  LambdaStarOptions lambda;
};

/// One nested comparison CI(T_inner) <= CI(T_outer), indices 0-based with
/// outer.first <= inner.first < inner.second <= outer.second.
struct NestedPairCheck {
  std::pair<size_t, size_t> outer;
  std::pair<size_t, size_t> inner;
  double margin = 0.0;  // CI(outer) - CI(inner)
  bool holds = true;
};

struct OrderingReport {
  bool independent = false;
  /// Independent chains make the ordering a theorem, so a violation is a
  /// failure; otherwise the checks are observations.
  bool theorem_check = false;
  bool all_hold = true;
  size_t violations = 0;
  std::vector<NestedPairCheck> checks;
  Eigen::MatrixXd ci;
  Eigen::MatrixXd lambda_star;
  std::pair<size_t, size_t> min_pair{0, 0};
  double min_ci = 0.0;
  bool min_pair_adjacent = true;
  IndependenceReport independence;

  std::string verdict() const {
    if (theorem_check) return all_hold ? "PASS" : "FAIL";
    return all_hold ? "HOLDS (not independent, observation only)"
                    : "VIOLATED (not independent, observation only)";
  }
};

inline OrderingReport verify_partial_ordering(const GraftChain& chain,
                                              const OrderingOptions& options = {}) {
  OrderingReport report;
  report.independence = is_independent_chain(chain);
  report.independent = report.independence.independent;
  report.theorem_check = report.independent;
  auto table = chain_pairwise(chain, options.lambda);
  report.ci = std::move(table.ci);
  report.lambda_star = std::move(table.lambda_star);

  const size_t n = chain.size();
  for (size_t p = 0; p < n; ++p) {
    for (size_t q = p + 1; q < n; ++q) {
      for (size_t i = p; i < q; ++i) {
        for (size_t j = i + 1; j <= q; ++j) {
          if (i == p && j == q) continue;
          NestedPairCheck c;
          c.outer = {p, q};
          c.inner = {i, j};
          c.margin = report.ci(p, q) - report.ci(i, j);
          c.holds = c.margin >= -options.slack;
          if (!c.holds) ++report.violations;
          report.checks.push_back(c);
        }
      }
    }
  }
  report.all_hold = report.violations == 0;

  if (n >= 2) {
    report.min_ci = report.ci(0, 1);
    report.min_pair = {0, 1};
    double adjacent_min = report.ci(0, 1);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        if (report.ci(i, j) < report.min_ci) {
          report.min_ci = report.ci(i, j);
          report.min_pair = {i, j};
        }
        if (j == i + 1) adjacent_min = std::min(adjacent_min, report.ci(i, j));
      }
    }
    report.min_pair_adjacent = adjacent_min <= report.min_ci + options.slack;
  }
  return report;
}

}  // namespace chernoff
