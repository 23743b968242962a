#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "chernoff/covariance.hpp"
#include "chernoff/errors.hpp"
#include "chernoff/gaussian_tree.hpp"
#include "chernoff/tree_ops.hpp"

namespace chernoff::io {

using nlohmann::json;

/// Rounds to 12 significant digits; the shortest round-trip form of the
/// result then has at most 12 digits when serialized.
inline double round12(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

inline json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

template <class Range>
json range_json(const Range& r) {
  json out = json::array();
  for (double x : r) out.push_back(number(x));
  return out;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline json tree_json(const TreeSpec& t) {
  json edges = json::array();
  for (const auto& e : t.edges) edges.push_back({e.i, e.j, number(e.w)});
  return {{"nodes", t.node_count}, {"edges", std::move(edges)}};
}

inline json graft_json(const GraftOp& op) {
  return {{"subtree_root", op.subtree_root},
          {"old_neighbor", op.old_neighbor},
          {"new_neighbor", op.new_neighbor},
          {"weight", number(op.weight)}};
}

// ---- parsing -------------------------------------------------------------

inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

namespace detail {

inline const json& field(const json& obj, const char* name, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(path + ": missing field \"" + name + "\"");
  return *it;
}

inline double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  return v.get<double>();
}

inline std::int64_t as_int(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ParseError(path + ": expected an integer");
}

inline int as_node(const json& v, const std::string& path) {
  const auto x = as_int(v, path);
  if (x < INT32_MIN || x > INT32_MAX) throw ParseError(path + ": integer out of range");
  return static_cast<int>(x);
}

}  // namespace detail

/// `{"nodes": N, "edges": [[i, j, w], ...]}`. Structural checks happen in
/// validate_tree; this only enforces the shape.
inline TreeSpec parse_tree(const json& j, const std::string& path = "$") {
  TreeSpec t;
  t.node_count = detail::as_node(detail::field(j, "nodes", path), path + ".nodes");
  const auto& edges = detail::field(j, "edges", path);
  if (!edges.is_array()) throw ParseError(path + ".edges: expected an array");
  for (size_t k = 0; k < edges.size(); ++k) {
    const std::string p = path + ".edges[" + std::to_string(k) + "]";
    const auto& e = edges[k];
    if (!e.is_array() || e.size() != 3) throw ParseError(p + ": expected [i, j, w]");
    t.edges.push_back({detail::as_node(e[0], p + "[0]"), detail::as_node(e[1], p + "[1]"),
                       detail::as_double(e[2], p + "[2]")});
  }
  return t;
}

inline Eigen::MatrixXd parse_matrix(const json& j, const std::string& path = "$") {
  if (!j.is_array() || j.empty()) throw ParseError(path + ": expected a non-empty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  for (size_t r = 0; r < rows; ++r) {
    const std::string p = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].empty()) throw ParseError(p + ": expected a non-empty row");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw ParseError(p + ": ragged row");
  }
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = detail::as_double(
          j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

/// A covariance given either as a TreeSpec object or as a dense matrix.
inline CovarianceMatrix parse_covariance(const json& j, const std::string& path = "$",
                                         std::vector<std::string>* warnings = nullptr) {
  if (j.is_object()) {
    const auto t = validate_tree(parse_tree(j, path), warnings);
    return build_covariance(t);
  }
  return CovarianceMatrix(parse_matrix(j, path));
}

inline GraftOp parse_graft(const json& j, const std::string& path = "$") {
  return {detail::as_node(detail::field(j, "subtree_root", path), path + ".subtree_root"),
          detail::as_node(detail::field(j, "old_neighbor", path), path + ".old_neighbor"),
          detail::as_node(detail::field(j, "new_neighbor", path), path + ".new_neighbor"),
          detail::as_double(detail::field(j, "weight", path), path + ".weight")};
}

/// `{"base": <TreeSpec>, "ops": [<GraftOp>, ...]}`.
inline GraftChain parse_chain(const json& j, const std::string& path = "$") {
  const auto base = parse_tree(detail::field(j, "base", path), path + ".base");
  const auto& ops_json = detail::field(j, "ops", path);
  if (!ops_json.is_array()) throw ParseError(path + ".ops: expected an array");
  std::vector<GraftOp> ops;
  for (size_t k = 0; k < ops_json.size(); ++k) {
    ops.push_back(parse_graft(ops_json[k], path + ".ops[" + std::to_string(k) + "]"));
  }
  return GraftChain(validate_tree(base), std::move(ops));
}

struct SimulationConfig {
  std::vector<CovarianceMatrix> models;
  std::vector<double> priors;
  std::vector<int> t_grid;
  long trials = 0;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

/// `{"models": [...], "priors": [...], "t_grid": [...], "trials": n, "seed": s}`;
/// "seed" is optional.
inline SimulationConfig parse_simulation_config(const json& j, const std::string& path = "$") {
  SimulationConfig c;
  const auto& models = detail::field(j, "models", path);
  if (!models.is_array()) throw ParseError(path + ".models: expected an array");
  for (size_t k = 0; k < models.size(); ++k) {
    c.models.push_back(parse_covariance(models[k], path + ".models[" + std::to_string(k) + "]"));
  }
  const auto& priors = detail::field(j, "priors", path);
  if (!priors.is_array()) throw ParseError(path + ".priors: expected an array");
  for (size_t k = 0; k < priors.size(); ++k) {
    c.priors.push_back(detail::as_double(priors[k], path + ".priors[" + std::to_string(k) + "]"));
  }
  const auto& grid = detail::field(j, "t_grid", path);
  if (!grid.is_array()) throw ParseError(path + ".t_grid: expected an array");
  for (size_t k = 0; k < grid.size(); ++k) {
    c.t_grid.push_back(detail::as_node(grid[k], path + ".t_grid[" + std::to_string(k) + "]"));
  }
  c.trials = static_cast<long>(detail::as_int(detail::field(j, "trials", path), path + ".trials"));
  if (j.contains("seed")) {
    const auto s = detail::as_int(j["seed"], path + ".seed");
    if (s < 0) throw ParseError(path + ".seed: expected a non-negative integer");
    c.has_seed = true;
    c.seed = static_cast<std::uint64_t>(s);
  }
  return c;
}

/// Comma-separated decimal list, e.g. "9.2341,0.1019,1".
inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ParseError("not a number: \"" + item + "\"");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw ParseError("not a number: \"" + item + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("empty number list");
  return out;
}

}  // namespace chernoff::io
