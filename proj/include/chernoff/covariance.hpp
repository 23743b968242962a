#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "chernoff/errors.hpp"

namespace chernoff {

/// Symmetric positive-definite matrix. Construction validates symmetry
/// (relative 1e-12) and positive definiteness (Cholesky must succeed); the
/// stored entries are the exact symmetric part of the input.
class CovarianceMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  explicit CovarianceMatrix(const Eigen::MatrixXd& entries) {
    if (entries.rows() != entries.cols()) {
      throw DimensionMismatch("covariance matrix must be square, got " +
                              std::to_string(entries.rows()) + "x" +
                              std::to_string(entries.cols()));
    }
    if (entries.rows() == 0) {
      throw DimensionMismatch("covariance matrix must have dimension >= 1");
    }
    if (!entries.allFinite()) {
      throw NotPositiveDefinite("covariance matrix has non-finite entries");
    }
    const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
    const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
      throw NotSymmetric("matrix is not symmetric (max |a_ij - a_ji| = " +
                         std::to_string(asym) + ")");
    }
    entries_ = 0.5 * (entries + entries.transpose());
    llt_.compute(entries_);
    if (llt_.info() != Eigen::Success) {
      throw NotPositiveDefinite("Cholesky factorization failed");
    }
    const auto diag = llt_.matrixLLT().diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
      throw NotPositiveDefinite("Cholesky factor has a non-positive pivot");
    }
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const { return llt_; }

  /// True when every diagonal entry equals 1.
  bool normalized() const {
    return ((entries_.diagonal().array() - 1.0).abs() <= kSymmetryTolerance)
        .all();
  }

  double log_determinant() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  double determinant() const { return std::exp(log_determinant()); }

  /// Dense inverse through the Cholesky factor.
  Eigen::MatrixXd inverse() const {
    Eigen::MatrixXd inv =
        llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    return 0.5 * (inv + inv.transpose());
  }

 private:
  Eigen::MatrixXd entries_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline void require_same_dim(const CovarianceMatrix& a,
                             const CovarianceMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("dimension mismatch: " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  }
}

}  // namespace chernoff
