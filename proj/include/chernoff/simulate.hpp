#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chernoff/covariance.hpp"
#include "chernoff/divergence.hpp"
#include "chernoff/errors.hpp"

namespace chernoff {

/// M >= 2 equal-dimension models with strictly positive priors summing to 1.
class HypothesisSet {
 public:
  HypothesisSet(std::vector<CovarianceMatrix> models, std::vector<double> priors)
      : models_(std::move(models)), priors_(std::move(priors)) {
    if (models_.size() < 2) {
      throw InvalidHypothesisSet("need at least two models, got " +
                                 std::to_string(models_.size()));
    }
    if (priors_.size() != models_.size()) {
      throw InvalidHypothesisSet(std::to_string(models_.size()) + " models but " +
                                 std::to_string(priors_.size()) + " priors");
    }
    double total = 0.0;
    for (double p : priors_) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw InvalidHypothesisSet("prior " + std::to_string(p) + " is not positive");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvalidHypothesisSet("priors sum to " + std::to_string(total) + ", not 1");
    }
    for (const auto& m : models_) require_same_dim(models_.front(), m);
  }

  size_t size() const { return models_.size(); }
  Eigen::Index dim() const { return models_.front().dim(); }
  const std::vector<CovarianceMatrix>& models() const { return models_; }
  const std::vector<double>& priors() const { return priors_; }

 private:
  std::vector<CovarianceMatrix> models_;
  std::vector<double> priors_;
};

/// SplitMix64: a 64-bit engine whose whole state is one word, so every trial
/// can own an independent stream keyed by (seed, t index, model, trial).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Folds `parts` into `seed` one word at a time.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = seed;
    for (auto p : parts) s = SplitMix64(s ^ SplitMix64(p)())();
    return s;
  }

 private:
  std::uint64_t state_;
};

namespace detail {

template <class Engine>
Eigen::MatrixXd draw_rows(const CovarianceMatrix& sigma, int t, Engine& engine) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(t, sigma.dim());
  for (int r = 0; r < t; ++r) {
    for (Eigen::Index c = 0; c < sigma.dim(); ++c) z(r, c) = normal(engine);
  }
  return z * sigma.cholesky().matrixL().transpose();
}

}  // namespace detail

/// t i.i.d. rows from N(0, sigma): standard normals times the Cholesky factor.
inline Eigen::MatrixXd sample_sequence(const CovarianceMatrix& sigma, int t,
                                       std::uint64_t seed) {
  if (t < 1) throw InvalidArgument("sample length must be >= 1, got " + std::to_string(t));
  SplitMix64 engine(seed);
  return detail::draw_rows(sigma, t, engine);
}

/// MAP rule with per-model Cholesky factors and log-determinants cached.
class MapClassifier {
 public:
  explicit MapClassifier(const HypothesisSet& hyps) : hyps_(hyps) {
    for (size_t k = 0; k < hyps.size(); ++k) {
      log_priors_.push_back(std::log(hyps.priors()[k]));
      log_dets_.push_back(hyps.models()[k].log_determinant());
    }
  }

  /// ln pi_k + sum_l ln N(x_l; 0, Sigma_k), omitting the model-independent
  /// -tN/2 ln(2 pi).
  double score(const Eigen::MatrixXd& x, size_t k) const {
    const Eigen::MatrixXd y =
        hyps_.models()[k].cholesky().matrixL().solve(x.transpose());
    return log_priors_[k] - 0.5 * static_cast<double>(x.rows()) * log_dets_[k] -
           0.5 * y.squaredNorm();
  }

  /// 0-based index of the winning model; ties go to the smallest index.
  size_t classify(const Eigen::MatrixXd& x) const {
    if (x.cols() != hyps_.dim()) {
      throw DimensionMismatch("sequence has " + std::to_string(x.cols()) +
                              " columns, models have dimension " +
                              std::to_string(hyps_.dim()));
    }
    size_t best = 0;
    double best_score = score(x, 0);
    for (size_t k = 1; k < hyps_.size(); ++k) {
      const double s = score(x, k);
      if (s > best_score) {
        best = k;
        best_score = s;
      }
    }
    return best;
  }

 private:
  const HypothesisSet& hyps_;
  std::vector<double> log_priors_;
  std::vector<double> log_dets_;
};

inline size_t map_classify(const Eigen::MatrixXd& x, const HypothesisSet& hyps) {
  return MapClassifier(hyps).classify(x);
}

/// Minimum error-rate count for a sample length to enter the slope fit.
inline constexpr long kMinErrorsForFit = 10;

struct ExponentEstimate {
  std::vector<int> sample_lengths;
  std::vector<double> error_rates;
  std::vector<long> error_counts;
  /// Trials per true model, proportional to the priors.
  std::vector<long> trials_per_model;
  /// Sample lengths that entered the fit.
  std::vector<int> fit_lengths;
  /// Least-squares slope of -ln P_e against t; NaN with fewer than two fit points.
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  double fitted_stderr = std::numeric_limits<double>::quiet_NaN();
  /// Minimum pairwise Chernoff information.
  double predicted = 0.0;
  bool all_errors_zero = false;
  std::vector<std::string> diagnostics;
};

/// Largest-remainder split of `trials` according to `priors`.
inline std::vector<long> allocate_trials(long trials, const std::vector<double>& priors) {
  std::vector<long> n(priors.size());
  std::vector<std::pair<double, size_t>> remainders;
  long used = 0;
  for (size_t k = 0; k < priors.size(); ++k) {
    const double exact = static_cast<double>(trials) * priors[k];
    n[k] = static_cast<long>(std::floor(exact));
    used += n[k];
    remainders.push_back({exact - static_cast<double>(n[k]), k});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t r = 0; used < trials && r < remainders.size(); ++r, ++used) {
    ++n[remainders[r].second];
  }
  return n;
}

inline double min_pairwise_chernoff(const HypothesisSet& hyps,
                                    const LambdaStarOptions& options = {}) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < hyps.size(); ++i) {
    for (size_t j = i + 1; j < hyps.size(); ++j) {
      best = std::min(best, chernoff_information(hyps.models()[i], hyps.models()[j],
                                                 options).ci);
    }
  }
  return best;
}

/// Ordinary least squares y = a + b x; returns (b, standard error of b).
inline std::pair<double, double> least_squares_slope(const std::vector<double>& x,
                                                     const std::vector<double>& y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const size_t n = x.size();
  if (n < 2) return {nan, nan};
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return {nan, nan};
  const double slope = sxy / sxx;
  if (n < 3) return {slope, nan};
  double ssr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    ssr += r * r;
  }
  return {slope, std::sqrt(ssr / static_cast<double>(n - 2) / sxx)};
}

/// Empirical MAP error rate per t and the fitted exponent. Every trial draws
/// from its own stream, so results do not depend on evaluation order.
inline ExponentEstimate estimate_error_exponent(const HypothesisSet& hyps,
                                                const std::vector<int>& t_grid, long trials,
                                                std::uint64_t seed,
                                                const LambdaStarOptions& options = {}) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (t_grid.empty()) throw InvalidArgument("t_grid is empty");
  for (size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 1) throw InvalidArgument("t_grid entries must be >= 1");
    if (i > 0 && t_grid[i] <= t_grid[i - 1]) {
      throw InvalidArgument("t_grid must be strictly ascending");
    }
  }

  ExponentEstimate est;
  est.predicted = min_pairwise_chernoff(hyps, options);
  est.trials_per_model = allocate_trials(trials, hyps.priors());
  for (size_t k = 0; k < hyps.size(); ++k) {
    if (est.trials_per_model[k] == 0) {
      est.diagnostics.push_back("model " + std::to_string(k + 1) +
                                " received no trials; its error term is omitted");
    }
  }

  const MapClassifier classifier(hyps);
  for (size_t ti = 0; ti < t_grid.size(); ++ti) {
    const int t = t_grid[ti];
    double rate = 0.0;
    long errors = 0;
    for (size_t k = 0; k < hyps.size(); ++k) {
      const long n = est.trials_per_model[k];
      long wrong = 0;
      for (long trial = 0; trial < n; ++trial) {
        SplitMix64 engine(SplitMix64::derive(
            seed, {static_cast<std::uint64_t>(ti), static_cast<std::uint64_t>(k),
                   static_cast<std::uint64_t>(trial)}));
        const auto x = detail::draw_rows(hyps.models()[k], t, engine);
        if (classifier.classify(x) != k) ++wrong;
      }
      errors += wrong;
      if (n > 0) rate += hyps.priors()[k] * static_cast<double>(wrong) / static_cast<double>(n);
    }
    est.sample_lengths.push_back(t);
    est.error_rates.push_back(rate);
    est.error_counts.push_back(errors);
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    if (est.error_counts[i] >= kMinErrorsForFit && est.error_rates[i] > 0.0) {
      est.fit_lengths.push_back(t_grid[i]);
      xs.push_back(t_grid[i]);
      ys.push_back(-std::log(est.error_rates[i]));
    }
  }
  est.all_errors_zero = std::all_of(est.error_counts.begin(), est.error_counts.end(),
                                    [](long e) { return e == 0; });
  if (est.all_errors_zero) {
    est.diagnostics.push_back(
        "AllErrorsZero: no misclassifications at this trial budget; exponent unbounded");
  }
  const auto [slope, se] = least_squares_slope(xs, ys);
  est.fitted_exponent = slope;
  est.fitted_stderr = se;
  est.diagnostics.push_back("slope fitted over " + std::to_string(xs.size()) +
                            " sample lengths with at least " +
                            std::to_string(kMinErrorsForFit) + " errors");
  return est;
}

}  // namespace chernoff
