#pragma once

#include "babc/gp.hpp"
#include "babc/types.hpp"

namespace babc {

/// Belief about the unnormalised ABC posterior at one parameter value: the prior density
/// there and the GP posterior mean and sd of the discrepancy mean function.
struct ThresholdedBelief {
  double epsilon = 0.0;
  double noise_sd = 1.0;
  double prior_density = 0.0;
  double mean = 0.0;
  double sd = 0.0;

  void validate() const;
};

/// (epsilon - m) / sqrt(sigma_n^2 + s^2)
double a_t(const ThresholdedBelief& b);

/// Posterior mean pi * Phi(a_t).
double unnorm_mean(const ThresholdedBelief& b);
/// Marginal median pi * Phi((epsilon - m) / sigma_n).
double unnorm_median(const ThresholdedBelief& b);
/// alpha-quantile pi * Phi((s Phi^{-1}(alpha) - m + epsilon) / sigma_n).
double unnorm_quantile(const ThresholdedBelief& b, double alpha);
/// Posterior variance pi^2 [Phi(a)Phi(-a) - 2 T(a, sigma_n / sqrt(sigma_n^2 + 2 s^2))], clamped at 0.
double unnorm_variance(const ThresholdedBelief& b);
/// Mean absolute deviation about the median, 2 pi T(a, s / sigma_n).
double unnorm_mad(const ThresholdedBelief& b);
/// pi * Phi((epsilon - f) / sigma_n) for a known value of f.
double true_unnorm_density(double f_value, double epsilon, double noise_sd, double prior_density);

/// log-scale variants for MCMC; -inf where the prior density is zero.
double log_unnorm_mean(const ThresholdedBelief& b);
double log_unnorm_median(const ThresholdedBelief& b);
double log_unnorm_quantile(const ThresholdedBelief& b, double alpha);

/// Point estimators of the ABC posterior paired with the acquisitions.
enum class Estimator { Mean, Median };

/// Belief states at a set of points, evaluated together.
struct BeliefField {
  double epsilon = 0.0;
  double noise_sd = 1.0;
  Vector prior_density;
  Vector mean;
  Vector sd;

  static BeliefField from_posterior(const GpPosterior& post, double epsilon, const UniformPrior& prior,
                                    const PointSet& points);
  static BeliefField from_features(const QueryFeatures& f, double epsilon, double noise_sd,
                                   const UniformPrior& prior);

  [[nodiscard]] int size() const { return static_cast<int>(mean.size()); }
  [[nodiscard]] ThresholdedBelief at(int i) const;
  [[nodiscard]] Vector a() const;
  [[nodiscard]] Vector unnorm_mean() const;
  [[nodiscard]] Vector unnorm_median() const;
  [[nodiscard]] Vector unnorm_quantile(double alpha) const;
  [[nodiscard]] Vector unnorm_variance() const;
  [[nodiscard]] Vector unnorm_mad() const;
  [[nodiscard]] Vector estimate(Estimator e) const;
  [[nodiscard]] Vector log_estimate(Estimator e) const;
};

}  // namespace babc
