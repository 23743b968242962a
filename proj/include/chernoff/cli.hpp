#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "chernoff/covariance.hpp"
#include "chernoff/dimred.hpp"
#include "chernoff/divergence.hpp"
#include "chernoff/errors.hpp"
#include "chernoff/gaussian_tree.hpp"
#include "chernoff/json_io.hpp"
#include "chernoff/simulate.hpp"
#include "chernoff/tree_ops.hpp"

namespace chernoff::cli {

using nlohmann::json;

/// Process exit codes; stable across releases.
enum ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3, kInternal = 4 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return kValidation;
    case ErrorKind::numeric: return kNumeric;
    case ErrorKind::internal: return kInternal;
  }
  return kInternal;
}

struct CommandResult {
  json payload = json::object();
  std::vector<std::string> diagnostics;
  /// Optional human-readable rendering used by --text.
  std::string text;
};

struct GlobalOptions {
  double tolerance = -1.0;  // < 0: library defaults
  bool text = false;

  LambdaStarOptions lambda() const {
    LambdaStarOptions o;
    if (tolerance >= 0.0) o.unit_tolerance = tolerance;
    return o;
  }
  OrderingOptions ordering() const {
    OrderingOptions o;
    o.lambda = lambda();
    if (tolerance >= 0.0) o.slack = tolerance;
    return o;
  }
};

namespace detail {

inline std::uint64_t default_seed() {
  const char* env = std::getenv("CHERNOFF_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') {
    throw ParseError(std::string("CHERNOFF_SEED is not a non-negative integer: ") + env);
  }
  return v;
}

inline void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

inline json chernoff_json(const ChernoffResult& r, bool spectrum, bool solver) {
  json j = {{"ci", io::number(r.ci)},
            {"lambda_star", io::number(r.lambda_star)},
            {"degenerate", r.degenerate}};
  if (spectrum) {
    j["spectrum"] = io::range_json(r.spectrum.values());
    j["beta"] = io::number(r.spectrum.beta());
  }
  if (solver) {
    j["iterations"] = r.iterations;
    j["kl_gap_at_lambda_star"] = io::number(r.residual);
    if (!r.degenerate) {
      const auto d = kl_interpolant_divergences(r.spectrum, r.lambda_star);
      j["kl_to_first"] = io::number(d.to_first);
      j["kl_to_second"] = io::number(d.to_second);
      j["lambda_equation_residual"] =
          io::number(lambda_equation_residual(r.spectrum, r.lambda_star));
    }
  }
  return j;
}

inline std::string fixed(double x, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << std::fixed << x;
  return s.str();
}

/// Generic "key: value" rendering of a payload for --text.
inline void render(const json& j, std::ostream& out, const std::string& indent = "") {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    const bool matrix = v.is_array() && !v.empty() && v.front().is_array();
    if (v.is_object()) {
      out << indent << it.key() << ":\n";
      render(v, out, indent + "  ");
    } else if (matrix) {
      out << indent << it.key() << ":\n";
      for (const auto& row : v) out << indent << "  " << row.dump() << "\n";
    } else if (v.is_array() && !v.empty() && v.front().is_object()) {
      out << indent << it.key() << ":\n";
      for (const auto& item : v) out << indent << "  - " << item.dump() << "\n";
    } else {
      out << indent << it.key() << ": " << (v.is_string() ? v.get<std::string>() : v.dump())
          << "\n";
    }
  }
}

inline std::pair<CovarianceMatrix, CovarianceMatrix> load_pair(
    const std::string& a, const std::string& b, std::vector<std::string>& diagnostics) {
  auto first = io::parse_covariance(io::read_file(a), a, &diagnostics);
  auto second = io::parse_covariance(io::read_file(b), b, &diagnostics);
  require_same_dim(first, second);
  return {std::move(first), std::move(second)};
}

inline TreeSpec load_tree(const std::string& path, std::vector<std::string>& diagnostics) {
  return validate_tree(io::parse_tree(io::read_file(path), path), &diagnostics);
}

inline json index_pair(std::pair<size_t, size_t> p) { return {p.first + 1, p.second + 1}; }

}  // namespace detail

// ---- commands ------------------------------------------------------------

inline CommandResult cmd_tree(const std::string& sub, const std::string& path) {
  CommandResult r;
  const auto tree = detail::load_tree(path, r.diagnostics);
  r.payload["nodes"] = tree.node_count;
  if (sub == "build") {
    r.payload["covariance"] = io::matrix_json(build_covariance(tree).matrix());
  } else if (sub == "invert") {
    const auto sigma = build_covariance(tree);
    const auto precision = tree_precision(tree);
    const Eigen::MatrixXd product = sigma.matrix() * precision.matrix();
    const double err =
        (product - Eigen::MatrixXd::Identity(tree.node_count, tree.node_count)).cwiseAbs().maxCoeff();
    r.payload["precision"] = io::matrix_json(precision.matrix());
    r.payload["identity_max_abs_error"] = io::number(err);
    r.payload["identity_check"] = err <= 1e-9;
  } else if (sub == "det") {
    const double det = tree_determinant(tree);
    r.payload["determinant"] = io::number(det);
    r.payload["log_determinant"] = io::number(std::log(det));
  } else {
    throw InvalidArgument("unknown tree subcommand: " + sub);
  }
  return r;
}

struct CiArgs {
  std::vector<std::string> files;
  std::string eigenvalues;
  bool spectrum = false;
  bool lambda_star = false;
};

inline CommandResult cmd_ci(const CiArgs& args, const GlobalOptions& g) {
  CommandResult r;
  ChernoffResult res;
  if (!args.eigenvalues.empty()) {
    if (!args.files.empty()) {
      throw InvalidArgument("give either two covariance files or --from-eigenvalues");
    }
    res = chernoff_from_spectrum(EigenSpectrum(io::parse_number_list(args.eigenvalues)),
                                 g.lambda());
  } else {
    if (args.files.size() != 2) {
      throw InvalidArgument("ci needs exactly two covariance files");
    }
    const auto [a, b] = detail::load_pair(args.files[0], args.files[1], r.diagnostics);
    res = chernoff_information(a, b, g.lambda());
  }
  detail::append(r.diagnostics, res.diagnostics);
  r.payload = detail::chernoff_json(res, args.spectrum, args.lambda_star);
  return r;
}

struct OpsArgs {
  std::string sub;
  std::vector<std::string> files;
  int node = 0;
  double weight = 0.0;
  bool has_weight = false;
  std::vector<int> edge;  // p, q
  double w1 = 0.0;
  double w2 = 0.0;
  int root = 0;
  int from = 0;
  int to = 0;
};

inline CommandResult cmd_ops(const OpsArgs& a, const GlobalOptions& g) {
  CommandResult r;
  auto pair_report = [&](const TreePair& before, const TreePair& after) {
    const auto ci_before = chernoff_information(build_covariance(before.first),
                                                build_covariance(before.second), g.lambda());
    const auto ci_after = chernoff_information(build_covariance(after.first),
                                               build_covariance(after.second), g.lambda());
    r.payload["trees"] = {io::tree_json(after.first), io::tree_json(after.second)};
    r.payload["before"] = detail::chernoff_json(ci_before, true, false);
    r.payload["after"] = detail::chernoff_json(ci_after, true, false);
    r.payload["ci_change"] = io::number(ci_after.ci - ci_before.ci);
  };
  if (a.sub == "add" || a.sub == "divide") {
    if (a.files.size() != 2) throw InvalidArgument("ops " + a.sub + " needs two tree files");
    const TreePair pair{detail::load_tree(a.files[0], r.diagnostics),
                        detail::load_tree(a.files[1], r.diagnostics)};
    if (a.sub == "add") {
      if (!a.has_weight) throw InvalidArgument("ops add needs --weight");
      pair_report(pair, adding_operation(pair, a.node, a.weight));
    } else {
      if (a.edge.size() != 2) throw InvalidArgument("ops divide needs --edge p,q");
      pair_report(pair, division_operation(pair, a.edge[0], a.edge[1], a.w1, a.w2));
    }
  } else if (a.sub == "graft") {
    if (a.files.size() != 1) throw InvalidArgument("ops graft needs one tree file");
    const auto tree = detail::load_tree(a.files[0], r.diagnostics);
    double w = a.weight;
    if (!a.has_weight) {
      const int k = chernoff::detail::find_edge(tree, a.root, a.from);
      if (k < 0) {
        throw EdgeNotFound("edge (" + std::to_string(a.root) + "," + std::to_string(a.from) +
                           ") is not in the tree");
      }
      w = tree.edges[static_cast<size_t>(k)].w;
    }
    const GraftOp op{a.root, a.from, a.to, w};
    const auto out = apply_graft(tree, op);
    const auto res = chernoff_information(build_covariance(tree), build_covariance(out),
                                          g.lambda());
    r.payload["op"] = io::graft_json(op);
    r.payload["tree"] = io::tree_json(out);
    r.payload["chernoff"] = detail::chernoff_json(res, true, false);
  } else {
    throw InvalidArgument("unknown ops subcommand: " + a.sub);
  }
  return r;
}

inline CommandResult cmd_chain(const std::string& path, bool verify, bool independence,
                               const GlobalOptions& g) {
  CommandResult r;
  const auto chain = io::parse_chain(io::read_file(path), path);
  json trees = json::array();
  for (const auto& t : chain.trees()) trees.push_back(io::tree_json(t));
  r.payload["trees"] = std::move(trees);

  const auto opts = g.ordering();
  const auto report = verify_partial_ordering(chain, opts);
  r.payload["ci"] = io::matrix_json(report.ci);
  r.payload["lambda_star"] = io::matrix_json(report.lambda_star);

  if (independence || verify) {
    const auto& ind = report.independence;
    json types = json::array();
    for (auto t : ind.op_types) types.push_back(static_cast<int>(t));
    json conflicts = json::array();
    for (auto c : ind.conflicts) conflicts.push_back(detail::index_pair(c));
    r.payload["independence"] = {{"independent", ind.independent},
                                 {"center", ind.center},
                                 {"op_types", std::move(types)},
                                 {"conflicting_ops", std::move(conflicts)}};
    detail::append(r.diagnostics, ind.notes);
  }
  if (verify) {
    json violations = json::array();
    for (const auto& c : report.checks) {
      if (c.holds) continue;
      violations.push_back({{"outer", detail::index_pair(c.outer)},
                            {"inner", detail::index_pair(c.inner)},
                            {"ci_outer", io::number(report.ci(c.outer.first, c.outer.second))},
                            {"ci_inner", io::number(report.ci(c.inner.first, c.inner.second))},
                            {"margin", io::number(c.margin)}});
    }
    r.payload["ordering"] = {{"verdict", report.verdict()},
                             {"checks", report.checks.size()},
                             {"violations", std::move(violations)},
                             {"min_pair", detail::index_pair(report.min_pair)},
                             {"min_ci", io::number(report.min_ci)},
                             {"min_pair_adjacent", report.min_pair_adjacent}};
  }
  return r;
}

struct DimredArgs {
  std::vector<std::string> files;
  int n_out = 0;
  bool compare_pca = false;
  int compare_random = 0;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

inline CommandResult cmd_dimred(const DimredArgs& a, const GlobalOptions& g) {
  CommandResult r;
  if (a.files.size() != 2) throw InvalidArgument("dimred needs two covariance files");
  const auto [s1, s2] = detail::load_pair(a.files[0], a.files[1], r.diagnostics);
  const auto candidates = candidate_reductions(s1, s2, a.n_out, g.lambda());
  const auto full = chernoff_information(s1, s2, g.lambda());
  json rows = json::array();
  for (const auto& c : candidates) {
    rows.push_back({{"k", c.k},
                    {"eigenvalues", io::range_json(c.ci.spectrum.values())},
                    {"ci", io::number(c.ci.ci)}});
  }
  const auto& best = candidates.front();
  r.payload = {{"n_out", a.n_out},
               {"m", count_above_one(full.spectrum)},
               {"candidates", std::move(rows)},
               {"optimal_k", best.k},
               {"optimal_ci", io::number(best.ci.ci)},
               {"full_ci", io::number(full.ci)},
               {"matrix", io::matrix_json(best.matrix)}};
  if (a.compare_pca) {
    json pca = json::object();
    const std::pair<const char*, const CovarianceMatrix*> sources[] = {{"sigma1", &s1},
                                                                      {"sigma2", &s2}};
    for (const auto& [name, sigma] : sources) {
      const auto [p1, p2] = reduced_pair(pca_baseline(*sigma, a.n_out), s1, s2);
      pca[std::string("ci_pca_") + name] = io::number(chernoff_information(p1, p2, g.lambda()).ci);
    }
    r.payload["pca"] = std::move(pca);
  }
  if (a.compare_random > 0) {
    const std::uint64_t seed = a.has_seed ? a.seed : detail::default_seed();
    const auto s = compare_random_projections(s1, s2, a.n_out, a.compare_random, seed, g.lambda());
    r.payload["random"] = {{"count", s.count},
                           {"seed", seed},
                           {"max_ci", io::number(s.max_ci)},
                           {"mean_ci", io::number(s.mean_ci)},
                           {"optimal_dominates", s.max_ci <= best.ci.ci + 1e-9}};
  }
  return r;
}

struct SimulateArgs {
  std::string config;
  std::string csv;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

inline CommandResult cmd_simulate(const SimulateArgs& a, const GlobalOptions& g) {
  CommandResult r;
  const auto cfg = io::parse_simulation_config(io::read_file(a.config), a.config);
  const std::uint64_t seed =
      a.has_seed ? a.seed : (cfg.has_seed ? cfg.seed : detail::default_seed());
  const HypothesisSet hyps(cfg.models, cfg.priors);
  const auto est = estimate_error_exponent(hyps, cfg.t_grid, cfg.trials, seed, g.lambda());
  detail::append(r.diagnostics, est.diagnostics);

  json rows = json::array();
  std::ostringstream text;
  text << std::setw(6) << "t" << std::setw(16) << "P_e" << std::setw(10) << "errors"
       << std::setw(16) << "-ln(P_e)/t" << "\n";
  for (size_t i = 0; i < est.sample_lengths.size(); ++i) {
    const int t = est.sample_lengths[i];
    const double p = est.error_rates[i];
    const double rate = p > 0.0 ? -std::log(p) / t : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({{"t", t},
                    {"error_rate", io::number(p)},
                    {"errors", est.error_counts[i]},
                    {"neg_log_rate_per_t", io::number(rate)}});
    text << std::setw(6) << t << std::setw(16) << detail::fixed(p, 8) << std::setw(10)
         << est.error_counts[i] << std::setw(16) << (p > 0.0 ? detail::fixed(rate) : "inf")
         << "\n";
  }
  text << "fitted exponent:    "
       << (std::isfinite(est.fitted_exponent) ? detail::fixed(est.fitted_exponent) : "n/a")
       << (std::isfinite(est.fitted_stderr) ? " +/- " + detail::fixed(est.fitted_stderr) : "")
       << "\n";
  text << "predicted exponent: " << detail::fixed(est.predicted) << "\n";

  r.payload = {{"seed", seed},
               {"trials", cfg.trials},
               {"trials_per_model", est.trials_per_model},
               {"rows", std::move(rows)},
               {"fit_lengths", est.fit_lengths},
               {"fitted_exponent", io::number(est.fitted_exponent)},
               {"fitted_stderr", io::number(est.fitted_stderr)},
               {"predicted_exponent", io::number(est.predicted)},
               {"all_errors_zero", est.all_errors_zero},
               {"fit_rule", "least-squares slope of -ln P_e over t with at least " +
                                std::to_string(kMinErrorsForFit) + " errors"}};
  r.text = text.str();

  if (!a.csv.empty()) {
    std::ofstream csv(a.csv);
    if (!csv) throw InvalidArgument("cannot write CSV file " + a.csv);
    csv << "t,error_rate,errors,neg_log_rate_per_t\n";
    for (const auto& row : r.payload["rows"]) {
      csv << row["t"].dump() << "," << row["error_rate"].dump() << "," << row["errors"].dump()
          << "," << row["neg_log_rate_per_t"].dump() << "\n";
    }
    r.payload["csv"] = a.csv;
  }
  return r;
}

// ---- driver --------------------------------------------------------------

inline void emit(std::ostream& out, const std::string& status, const json& payload,
                 const std::vector<std::string>& diagnostics) {
  json j = {{"status", status}, {"payload", payload}, {"diagnostics", diagnostics}};
  out << j.dump(2) << "\n";
}

inline void emit_error(std::ostream& out, const std::string& code, const std::string& message,
                       bool text) {
  if (text) {
    out << "error [" << code << "]: " << message << "\n";
  } else {
    emit(out, "error", {{"code", code}, {"message", message}}, {});
  }
}

/// Runs one command. `args` excludes the program name. Returns the exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chernoff information toolkit for Gaussian trees and covariance pairs",
               "chernoff"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--tolerance", g.tolerance,
                 "override the unit-eigenvalue tolerance and ordering slack");
  app.add_flag("--text", g.text, "human-readable output instead of JSON");

  std::string tree_sub;
  std::string tree_file;
  auto* tree = app.add_subcommand("tree", "covariance, precision or determinant of a tree");
  tree->add_option("action", tree_sub, "build | invert | det")
      ->required()
      ->check(CLI::IsMember({"build", "invert", "det"}));
  tree->add_option("file", tree_file, "TreeSpec JSON")->required();

  CiArgs ci_args;
  auto* ci = app.add_subcommand("ci", "Chernoff information of a covariance pair");
  ci->add_option("files", ci_args.files, "two TreeSpec or matrix JSON files");
  ci->add_option("--from-eigenvalues", ci_args.eigenvalues, "comma-separated spectrum");
  ci->add_flag("--spectrum", ci_args.spectrum, "include the generalized spectrum and beta");
  ci->add_flag("--lambda-star", ci_args.lambda_star, "include solver details for lambda*");

  OpsArgs ops_args;
  std::string ops_weight;
  auto* ops = app.add_subcommand("ops", "apply an adding, division or grafting operation");
  ops->add_option("action", ops_args.sub, "add | divide | graft")
      ->required()
      ->check(CLI::IsMember({"add", "divide", "graft"}));
  ops->add_option("files", ops_args.files, "tree file(s)");
  ops->add_option("--node", ops_args.node, "add: attach node");
  ops->add_option("--weight", ops_args.weight, "add: new edge weight; graft: moved edge weight");
  ops->add_option("--edge", ops_args.edge, "divide: shared edge p,q")->delimiter(',');
  ops->add_option("--w1", ops_args.w1, "divide: weight of (p, new)");
  ops->add_option("--w2", ops_args.w2, "divide: weight of (new, q)");
  ops->add_option("--root", ops_args.root, "graft: subtree root");
  ops->add_option("--from", ops_args.from, "graft: current neighbor");
  ops->add_option("--to", ops_args.to, "graft: new neighbor");

  std::string chain_file;
  bool verify = false;
  bool check_independence = false;
  auto* chain = app.add_subcommand("chain", "pairwise CI over a grafting chain");
  chain->add_option("file", chain_file, "chain JSON")->required();
  chain->add_flag("--verify-ordering", verify, "check nested-pair CI ordering");
  chain->add_flag("--check-independence", check_independence, "report the star decomposition");

  DimredArgs dim_args;
  auto* dimred = app.add_subcommand("dimred", "Chernoff-optimal linear dimension reduction");
  dimred->add_option("files", dim_args.files, "two TreeSpec or matrix JSON files");
  dimred->add_option("--n-out", dim_args.n_out, "output dimension")->required();
  dimred->add_flag("--compare-pca", dim_args.compare_pca, "report PCA baselines");
  dimred->add_option("--compare-random", dim_args.compare_random, "number of random projections");
  auto* dim_seed = dimred->add_option("--seed", dim_args.seed, "random projection seed");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo error exponent");
  simulate->add_option("config", sim_args.config, "simulation config JSON")->required();
  simulate->add_option("--csv", sim_args.csv, "also write per-t rows as CSV");
  auto* sim_seed = simulate->add_option("--seed", sim_args.seed, "override the config seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "UsageError", e.what(), g.text);
    return kValidation;
  }
  ops_args.has_weight = ops->count("--weight") > 0;
  dim_args.has_seed = dim_seed->count() > 0;
  sim_args.has_seed = sim_seed->count() > 0;

  try {
    CommandResult r;
    if (tree->parsed()) r = cmd_tree(tree_sub, tree_file);
    else if (ci->parsed()) r = cmd_ci(ci_args, g);
    else if (ops->parsed()) r = cmd_ops(ops_args, g);
    else if (chain->parsed()) r = cmd_chain(chain_file, verify, check_independence, g);
    else if (dimred->parsed()) r = cmd_dimred(dim_args, g);
    else r = cmd_simulate(sim_args, g);

    if (g.text) {
      if (!r.text.empty()) out << r.text;
      else detail::render(r.payload, out);
      for (const auto& d : r.diagnostics) out << "note: " << d << "\n";
    } else {
      emit(out, "ok", r.payload, r.diagnostics);
    }
    return kOk;
  } catch (const Error& e) {
    emit_error(err, e.code(), e.what(), g.text);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    emit_error(err, "InternalError", e.what(), g.text);
    return kInternal;
  }
}

}  // namespace chernoff::cli
