#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/covariance.hpp"
#include "chernoff/divergence.hpp"
#include "chernoff/errors.hpp"
#include "chernoff/geneig.hpp"

namespace chernoff {

/// Eigenvalues within this distance of 1 are never counted as "greater than 1".
inline constexpr double kAboveOneTolerance = 1e-12;

/// One admissible projection: k rows of P for the k largest eigenvalues and
/// n_out - k rows for the smallest ones.
struct ReductionCandidate {
  int k = 0;
  /// Indices into the ascending spectrum, ascending.
  std::vector<size_t> row_indices;
  /// n_out x N rows of the diagonalizer.
  Eigen::MatrixXd matrix;
  ChernoffResult ci;
};

inline int count_above_one(const EigenSpectrum& spectrum) {
  return static_cast<int>(std::count_if(spectrum.values().begin(), spectrum.values().end(),
                                        [](double l) { return l > 1.0 + kAboveOneTolerance; }));
}

/// Inclusive range of admissible k: [max(n_out + m - N, 0), min(m, n_out)].
inline std::pair<int, int> admissible_k_range(int m, int dim, int n_out) {
  return {std::max(n_out + m - dim, 0), std::min(m, n_out)};
}

namespace detail {

inline void require_budget(Eigen::Index dim, int n_out) {
  if (n_out < 1 || n_out > dim) {
    throw InvalidBudget("output dimension must lie in 1.." + std::to_string(dim) +
                        ", got " + std::to_string(n_out));
  }
}

}  // namespace detail

/// Candidates sorted by CI, best first. Among candidates whose CI agrees to
/// 1e-12 (relative) the one with the smaller k comes first.
inline std::vector<ReductionCandidate> candidate_reductions(
    const CovarianceMatrix& sigma1, const CovarianceMatrix& sigma2, int n_out,
    const LambdaStarOptions& options = {}) {
  require_same_dim(sigma1, sigma2);
  detail::require_budget(sigma1.dim(), n_out);
  const auto diag = simultaneous_diagonalizer(sigma1, sigma2);
  const int dim = static_cast<int>(sigma1.dim());
  const int m = count_above_one(diag.spectrum);
  const auto [k_lo, k_hi] = admissible_k_range(m, dim, n_out);

  std::vector<ReductionCandidate> out;
  for (int k = k_lo; k <= k_hi; ++k) {
    ReductionCandidate c;
    c.k = k;
    for (int r = 0; r < n_out - k; ++r) c.row_indices.push_back(static_cast<size_t>(r));
    for (int r = dim - k; r < dim; ++r) c.row_indices.push_back(static_cast<size_t>(r));
    c.matrix.resize(n_out, dim);
    std::vector<double> selected;
    for (size_t r = 0; r < c.row_indices.size(); ++r) {
      c.matrix.row(static_cast<Eigen::Index>(r)) =
          diag.P.row(static_cast<Eigen::Index>(c.row_indices[r]));
      selected.push_back(diag.spectrum[c.row_indices[r]]);
    }
    c.ci = chernoff_from_spectrum(EigenSpectrum(std::move(selected)), options);
    out.push_back(std::move(c));
  }

  // Pick the winner scanning k upward so near-ties keep the smaller k.
  size_t best = 0;
  for (size_t c = 1; c < out.size(); ++c) {
    const double tol = 1e-12 * std::max(1.0, out[best].ci.ci);
    if (out[c].ci.ci > out[best].ci.ci + tol) best = c;
  }
  std::rotate(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(best),
              out.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  std::stable_sort(out.begin() + 1, out.end(), [](const auto& a, const auto& b) {
    return a.ci.ci > b.ci.ci;
  });
  return out;
}

inline ReductionCandidate optimal_reduction(const CovarianceMatrix& sigma1,
                                            const CovarianceMatrix& sigma2, int n_out,
                                            const LambdaStarOptions& options = {}) {
  return candidate_reductions(sigma1, sigma2, n_out, options).front();
}

/// (A Sigma1 A^T, A Sigma2 A^T) for a full-row-rank A.
inline std::pair<CovarianceMatrix, CovarianceMatrix> reduced_pair(
    const Eigen::MatrixXd& projection, const CovarianceMatrix& sigma1,
    const CovarianceMatrix& sigma2) {
  require_same_dim(sigma1, sigma2);
  if (projection.cols() != sigma1.dim() || projection.rows() < 1) {
    throw DimensionMismatch("projection is " + std::to_string(projection.rows()) + "x" +
                            std::to_string(projection.cols()) + ", expected k x " +
                            std::to_string(sigma1.dim()));
  }
  if (projection.rows() > projection.cols()) {
    throw RankDeficientProjection("projection has more rows than columns");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(projection);
  const auto& sv = svd.singularValues();
  if (!(sv.minCoeff() > 1e-12 * sv.maxCoeff())) {
    throw RankDeficientProjection("projection does not have full row rank");
  }
  auto project = [&](const CovarianceMatrix& s) {
    const Eigen::MatrixXd m = projection * s.matrix() * projection.transpose();
    return CovarianceMatrix(0.5 * (m + m.transpose()));
  };
  return {project(sigma1), project(sigma2)};
}

/// Rows are the leading n_out eigenvectors of a single covariance matrix,
/// largest variance first. Comparison baseline only.
inline Eigen::MatrixXd pca_baseline(const CovarianceMatrix& sigma, int n_out) {
  detail::require_budget(sigma.dim(), n_out);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma.matrix());
  const Eigen::Index n = sigma.dim();
  Eigen::MatrixXd rows(n_out, n);
  for (int r = 0; r < n_out; ++r) rows.row(r) = eig.eigenvectors().col(n - 1 - r).transpose();
  return rows;
}

struct RandomProjectionSummary {
  int count = 0;
  double max_ci = 0.0;
  double mean_ci = 0.0;
};

/// CI after `count` projections with i.i.d. standard normal entries.
inline RandomProjectionSummary compare_random_projections(const CovarianceMatrix& sigma1,
                                                          const CovarianceMatrix& sigma2,
                                                          int n_out, int count,
                                                          std::uint64_t seed,
                                                          const LambdaStarOptions& options = {}) {
  require_same_dim(sigma1, sigma2);
  detail::require_budget(sigma1.dim(), n_out);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RandomProjectionSummary out;
  double total = 0.0;
  for (int r = 0; r < count; ++r) {
    Eigen::MatrixXd d(n_out, sigma1.dim());
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
    // CI depends only on the row space of d. An orthonormal basis of it keeps
    // the projected pair as well conditioned as the inputs.
    const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(d.transpose())
                                      .householderQ() *
                                  Eigen::MatrixXd::Identity(sigma1.dim(), n_out);
    const auto [a, b] = reduced_pair(basis.transpose(), sigma1, sigma2);
    const double ci = chernoff_information(a, b, options).ci;
    out.max_ci = out.count == 0 ? ci : std::max(out.max_ci, ci);
    total += ci;
    ++out.count;
  }
  out.mean_ci = out.count > 0 ? total / out.count : 0.0;
  return out;
}

}  // namespace chernoff
