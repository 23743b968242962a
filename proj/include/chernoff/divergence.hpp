#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/covariance.hpp"
#include "chernoff/errors.hpp"
#include "chernoff/geneig.hpp"

namespace chernoff {

// All divergences are in nats.

/// D(Sigma1 || Sigma2) for zero-mean Gaussians. Uses the Cholesky factors for
/// both log-determinants and for tr(Sigma2^-1 Sigma1) = ||L2^-1 L1||_F^2.
inline double kl_divergence(const CovarianceMatrix& sigma1,
                            const CovarianceMatrix& sigma2) {
  require_same_dim(sigma1, sigma2);
  const double n = static_cast<double>(sigma1.dim());
  const Eigen::MatrixXd l1 = sigma1.cholesky().matrixL();
  const Eigen::MatrixXd m = sigma2.cholesky().matrixL().solve(l1);
  const double trace = m.squaredNorm();
  const double d = 0.5 * (sigma2.log_determinant() - sigma1.log_determinant()) +
                   0.5 * trace - 0.5 * n;
  return std::max(0.0, d);
}

enum class Direction {
  forward,  // D(Sigma1 || Sigma2)
  reverse,  // D(Sigma2 || Sigma1)
};

inline double kl_from_spectrum(const EigenSpectrum& spectrum,
                               Direction direction = Direction::forward) {
  double sum = 0.0;
  for (double l : spectrum.values()) {
    sum += direction == Direction::forward ? (-std::log(l) + l - 1.0)
                                           : (std::log(l) + 1.0 / l - 1.0);
  }
  return std::max(0.0, 0.5 * sum);
}

inline void require_unit_interval(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

/// Sigma_lambda = (lambda Sigma1^-1 + (1 - lambda) Sigma2^-1)^-1.
inline CovarianceMatrix sigma_lambda(const CovarianceMatrix& sigma1,
                                     const CovarianceMatrix& sigma2,
                                     double lambda) {
  require_same_dim(sigma1, sigma2);
  require_unit_interval(lambda);
  if (lambda == 1.0) return sigma1;
  if (lambda == 0.0) return sigma2;
  const Eigen::MatrixXd precision =
      lambda * sigma1.inverse() + (1.0 - lambda) * sigma2.inverse();
  return CovarianceMatrix(CovarianceMatrix(precision).inverse());
}

/// D(Sigma_lambda || Sigma1) and D(Sigma_lambda || Sigma2) evaluated in the
/// jointly diagonal coordinates.
struct InterpolantDivergences {
  double to_first = 0.0;
  double to_second = 0.0;
};

inline InterpolantDivergences kl_interpolant_divergences(const EigenSpectrum& spectrum,
                                                         double lambda) {
  require_unit_interval(lambda);
  InterpolantDivergences d;
  for (double l : spectrum.values()) {
    const double s = lambda + (1.0 - lambda) * l;
    d.to_first += std::log(s) + 1.0 / s - 1.0;
    d.to_second += std::log(s / l) + l / s - 1.0;
  }
  d.to_first *= 0.5;
  d.to_second *= 0.5;
  return d;
}

namespace detail {

/// sum_i ((1 - l_i) / s_i + ln l_i) with s_i = x + (1 - x) l_i. Equals
/// 2 (D(S_x||S1) - D(S_x||S2)); strictly decreasing on [0, 1] unless every
/// l_i = 1.
inline double lambda_root_function(const EigenSpectrum& spectrum, double x) {
  double f = 0.0;
  for (double l : spectrum.values()) {
    f += (1.0 - l) / (x + (1.0 - x) * l) + std::log(l);
  }
  return f;
}

inline double lambda_root_derivative(const EigenSpectrum& spectrum, double x) {
  double d = 0.0;
  for (double l : spectrum.values()) {
    const double s = x + (1.0 - x) * l;
    d -= (1.0 - l) * (1.0 - l) / (s * s);
  }
  return d;
}

/// Per-dimension contribution g(nu) = ln(s) + 1/s - 1 with s = lambda +
/// (1 - lambda) nu, so D(Sigma_lambda || Sigma1) = 1/2 sum_i g(nu_i).
inline double per_dimension_divergence(double lambda, double nu) {
  const double s = lambda + (1.0 - lambda) * nu;
  return std::log(s) + 1.0 / s - 1.0;
}

}  // namespace detail

/// sum_i 1/(x + (1-x) l_i) - N - (x - 1) ln beta.
inline double lambda_equation_residual(const EigenSpectrum& spectrum, double x) {
  double sum = 0.0;
  for (double l : spectrum.values()) sum += 1.0 / (x + (1.0 - x) * l);
  return sum - static_cast<double>(spectrum.dim()) - (x - 1.0) * spectrum.log_beta();
}

/// sum_i l_i/(x + (1-x) l_i) - N - x ln beta. Vanishes at the same x as
/// lambda_equation_residual.
inline double lambda_equation_residual_alt(const EigenSpectrum& spectrum, double x) {
  double sum = 0.0;
  for (double l : spectrum.values()) sum += l / (x + (1.0 - x) * l);
  return sum - static_cast<double>(spectrum.dim()) - x * spectrum.log_beta();
}

struct LambdaStarOptions {
  double unit_tolerance = kUnitEigenvalueTolerance;
  double bisection_tolerance = 1e-12;
  int max_newton_steps = 5;
};

struct LambdaStarSolution {
  double lambda = 0.5;
  int iterations = 0;
  /// |D(Sigma_lambda || Sigma1) - D(Sigma_lambda || Sigma2)| at the solution.
  double residual = 0.0;
  std::vector<std::string> diagnostics;
};

/// Unique x in [0, 1] with D(Sigma_x || Sigma1) = D(Sigma_x || Sigma2).
/// Bisection to `bisection_tolerance`, then Newton polishing that is only
/// accepted when it stays inside the bracket and lowers |f|.
inline LambdaStarSolution solve_lambda_star(const EigenSpectrum& spectrum,
                                            const LambdaStarOptions& options = {}) {
  if (spectrum.dim() == 0 || spectrum.all_unit(options.unit_tolerance)) {
    throw DegenerateSpectrum(
        "every generalized eigenvalue equals 1; lambda* is not unique");
  }
  LambdaStarSolution sol;

  double lo = 0.0;
  double hi = 1.0;
  const double f_lo = detail::lambda_root_function(spectrum, lo);
  const double f_hi = detail::lambda_root_function(spectrum, hi);
  if (f_lo < 0.0 || f_hi > 0.0) {
    sol.diagnostics.push_back("bracketing signs violated: f(0) = " +
                              std::to_string(f_lo) + ", f(1) = " +
                              std::to_string(f_hi));
  }
  while (hi - lo > options.bisection_tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double f = detail::lambda_root_function(spectrum, mid);
    ++sol.iterations;
    if (f > 0.0) {
      lo = mid;
    } else if (f < 0.0) {
      hi = mid;
    } else {
      lo = hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  double fx = detail::lambda_root_function(spectrum, x);
  for (int step = 0; step < options.max_newton_steps && fx != 0.0; ++step) {
    const double df = detail::lambda_root_derivative(spectrum, x);
    if (df == 0.0) break;
    const double next = x - fx / df;
    if (!(next >= lo && next <= hi)) break;
    const double f_next = detail::lambda_root_function(spectrum, next);
    ++sol.iterations;
    if (std::abs(f_next) >= std::abs(fx)) break;
    x = next;
    fx = f_next;
  }
  sol.lambda = x;
  const auto d = kl_interpolant_divergences(spectrum, x);
  sol.residual = std::abs(d.to_first - d.to_second);
  return sol;
}

inline double lambda_star(const EigenSpectrum& spectrum,
                          const LambdaStarOptions& options = {}) {
  return solve_lambda_star(spectrum, options).lambda;
}

struct ChernoffResult {
  double ci = 0.0;
  double lambda_star = 0.5;
  EigenSpectrum spectrum;
  int iterations = 0;
  double residual = 0.0;
  /// True when every eigenvalue is unit: CI = 0 and lambda* = 1/2 by convention.
  bool degenerate = false;
  std::vector<std::string> diagnostics;
};

/// CI = 1/2 sum_i ln((1 - x) sqrt(l_i) + x / sqrt(l_i)) + 1/2 (x - 1/2) ln beta
/// at x = lambda*.
inline ChernoffResult chernoff_from_spectrum(const EigenSpectrum& spectrum,
                                             const LambdaStarOptions& options = {}) {
  ChernoffResult r;
  r.spectrum = spectrum;
  if (spectrum.dim() == 0 || spectrum.all_unit(options.unit_tolerance)) {
    r.degenerate = true;
    r.diagnostics.push_back("degenerate spectrum: all eigenvalues are 1; CI = 0, lambda* = 0.5");
    return r;
  }
  auto sol = solve_lambda_star(spectrum, options);
  const double x = sol.lambda;
  double sum = 0.0;
  for (double l : spectrum.values()) {
    const double root = std::sqrt(l);
    sum += std::log((1.0 - x) * root + x / root);
  }
  r.ci = std::max(0.0, 0.5 * sum + 0.5 * (x - 0.5) * spectrum.log_beta());
  r.lambda_star = x;
  r.iterations = sol.iterations;
  r.residual = sol.residual;
  r.diagnostics = std::move(sol.diagnostics);
  return r;
}

inline ChernoffResult chernoff_information(const CovarianceMatrix& sigma1,
                                           const CovarianceMatrix& sigma2,
                                           const LambdaStarOptions& options = {}) {
  return chernoff_from_spectrum(generalized_eigenvalues(sigma1, sigma2), options);
}

}  // namespace chernoff
