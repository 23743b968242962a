#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/covariance.hpp"
#include "chernoff/errors.hpp"

namespace chernoff {

/// Default tolerance for classifying a generalized eigenvalue as 1.
inline constexpr double kUnitEigenvalueTolerance = 1e-8;

/// Ascending positive generalized eigenvalues of a covariance pair, i.e. the
/// eigenvalues of Sigma1 * Sigma2^-1, together with their product beta.
class EigenSpectrum {
 public:
  EigenSpectrum() = default;

  /// Sorts ascending; throws NonPositiveEigenvalue on any value <= 0 or NaN.
  explicit EigenSpectrum(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw NonPositiveEigenvalue("generalized eigenvalue " + std::to_string(v) +
                                    " is not a positive finite number");
      }
    }
    std::sort(values_.begin(), values_.end());
    log_beta_ = 0.0;
    beta_ = 1.0;
    for (double v : values_) {
      log_beta_ += std::log(v);
      beta_ *= v;
    }
  }

  std::span<const double> values() const& { return values_; }
  /// By value on temporaries so `for (x : f().values())` does not dangle.
  std::vector<double> values() && { return std::move(values_); }
  size_t dim() const { return values_.size(); }
  double operator[](size_t k) const { return values_[k]; }

  /// beta = prod lambda_i = |Sigma1| / |Sigma2|.
  double beta() const { return beta_; }
  double log_beta() const { return log_beta_; }

  /// Spectrum of the swapped pair (Sigma2, Sigma1): reciprocals, re-sorted.
  EigenSpectrum reciprocal() const {
    std::vector<double> r;
    r.reserve(values_.size());
    for (double v : values_) r.push_back(1.0 / v);
    return EigenSpectrum(std::move(r));
  }

  bool all_unit(double tolerance = kUnitEigenvalueTolerance) const {
    return std::all_of(values_.begin(), values_.end(),
                       [&](double v) { return std::abs(v - 1.0) <= tolerance; });
  }

 private:
  std::vector<double> values_;
  double beta_ = 1.0;
  double log_beta_ = 0.0;
};

/// Congruence P with P Sigma2 P^T = I and P Sigma1 P^T = diag(spectrum).
/// Row k of P belongs to spectrum[k].
struct Diagonalizer {
  Eigen::MatrixXd P;
  EigenSpectrum spectrum;
};

/// Whitening route: Sigma2 = L L^T, C = L^-1 Sigma1 L^-T = U diag(lambda) U^T,
/// P = U^T L^-1. C is symmetric, so repeated eigenvalues need no special care.
inline Diagonalizer simultaneous_diagonalizer(const CovarianceMatrix& sigma1,
                                              const CovarianceMatrix& sigma2) {
  require_same_dim(sigma1, sigma2);
  const Eigen::Index n = sigma1.dim();
  const auto lower = sigma2.cholesky().matrixL();

  const Eigen::MatrixXd half = lower.solve(sigma1.matrix());
  Eigen::MatrixXd whitened = lower.solve(half.transpose());
  whitened = 0.5 * (whitened + whitened.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(whitened);
  if (eig.info() != Eigen::Success) {
    throw NotPositiveDefinite("symmetric eigensolver did not converge");
  }
  const Eigen::VectorXd& lambdas = eig.eigenvalues();  // ascending
  if (lambdas.minCoeff() <= 0.0) {
    throw NotPositiveDefinite(
        "whitened Sigma1 has a non-positive eigenvalue; the pair is too "
        "ill-conditioned");
  }
  const Eigen::MatrixXd l_inv = lower.solve(Eigen::MatrixXd::Identity(n, n));

  Diagonalizer out;
  out.P = eig.eigenvectors().transpose() * l_inv;
  out.spectrum = EigenSpectrum(std::vector<double>(lambdas.data(), lambdas.data() + n));
  return out;
}

inline EigenSpectrum generalized_eigenvalues(const CovarianceMatrix& sigma1,
                                             const CovarianceMatrix& sigma2) {
  return simultaneous_diagonalizer(sigma1, sigma2).spectrum;
}

}  // namespace chernoff
