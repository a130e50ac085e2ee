#include "babc/abcmodel.hpp"

#include "babc/error.hpp"
#include "babc/specfn.hpp"

#include <cmath>
#include <limits>

namespace babc {

using specfn::log_norm_cdf;
using specfn::norm_cdf;
using specfn::owen_t;

void ThresholdedBelief::validate() const {
  if (!(noise_sd > 0.0)) throw DomainError("ThresholdedBelief: noise sd must be > 0");
  if (!(sd >= 0.0)) throw DomainError("ThresholdedBelief: surrogate sd must be >= 0");
  if (!(prior_density >= 0.0)) throw DomainError("ThresholdedBelief: prior density must be >= 0");
  if (!std::isfinite(epsilon) || !std::isfinite(mean) || !std::isfinite(sd) || !std::isfinite(prior_density)) {
    throw DomainError("ThresholdedBelief: non-finite field");
  }
}

double a_t(const ThresholdedBelief& b) {
  return (b.epsilon - b.mean) / std::sqrt(b.noise_sd * b.noise_sd + b.sd * b.sd);
}

double unnorm_mean(const ThresholdedBelief& b) {
  if (b.prior_density == 0.0) return 0.0;
  return b.prior_density * norm_cdf(a_t(b));
}

double unnorm_median(const ThresholdedBelief& b) {
  if (b.prior_density == 0.0) return 0.0;
  return b.prior_density * norm_cdf((b.epsilon - b.mean) / b.noise_sd);
}

double unnorm_quantile(const ThresholdedBelief& b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("unnorm_quantile: alpha must lie in (0, 1)");
  if (b.prior_density == 0.0) return 0.0;
  const double z = specfn::norm_inv_cdf(alpha);
  return b.prior_density * norm_cdf((b.sd * z - b.mean + b.epsilon) / b.noise_sd);
}

double unnorm_variance(const ThresholdedBelief& b) {
  if (b.prior_density == 0.0 || b.sd == 0.0) return 0.0;
  const double a = a_t(b);
  const double s2 = b.sd * b.sd;
  const double n2 = b.noise_sd * b.noise_sd;
  const double v = norm_cdf(a) * norm_cdf(-a) - 2.0 * owen_t(a, b.noise_sd / std::sqrt(n2 + 2.0 * s2));
  return b.prior_density * b.prior_density * std::max(v, 0.0);
}

double unnorm_mad(const ThresholdedBelief& b) {
  if (b.prior_density == 0.0 || b.sd == 0.0) return 0.0;
  return 2.0 * b.prior_density * owen_t(a_t(b), b.sd / b.noise_sd);
}

double true_unnorm_density(double f_value, double epsilon, double noise_sd, double prior_density) {
  if (!(noise_sd > 0.0)) throw DomainError("true_unnorm_density: noise sd must be > 0");
  if (prior_density == 0.0) return 0.0;
  if (f_value == -std::numeric_limits<double>::infinity()) return prior_density;
  return prior_density * norm_cdf((epsilon - f_value) / noise_sd);
}

double log_unnorm_mean(const ThresholdedBelief& b) {
  if (b.prior_density <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(b.prior_density) + log_norm_cdf(a_t(b));
}

double log_unnorm_median(const ThresholdedBelief& b) {
  if (b.prior_density <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(b.prior_density) + log_norm_cdf((b.epsilon - b.mean) / b.noise_sd);
}

double log_unnorm_quantile(const ThresholdedBelief& b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("log_unnorm_quantile: alpha must lie in (0, 1)");
  if (b.prior_density <= 0.0) return -std::numeric_limits<double>::infinity();
  const double z = specfn::norm_inv_cdf(alpha);
  return std::log(b.prior_density) + log_norm_cdf((b.sd * z - b.mean + b.epsilon) / b.noise_sd);
}

BeliefField BeliefField::from_features(const QueryFeatures& f, double epsilon, double noise_sd,
                                       const UniformPrior& prior) {
  BeliefField out;
  out.epsilon = epsilon;
  out.noise_sd = noise_sd;
  out.mean = f.mean;
  out.sd = f.var.cwiseSqrt();
  out.prior_density.resize(f.points.cols());
  for (Eigen::Index j = 0; j < f.points.cols(); ++j) out.prior_density[j] = prior.density(f.points.col(j));
  return out;
}

BeliefField BeliefField::from_posterior(const GpPosterior& post, double epsilon, const UniformPrior& prior,
                                        const PointSet& points) {
  BeliefField out;
  out.epsilon = epsilon;
  out.noise_sd = post.hyper().noise_sd();
  Vector var;
  post.predict_marginal(points, out.mean, var);
  out.sd = var.cwiseSqrt();
  out.prior_density.resize(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) out.prior_density[j] = prior.density(points.col(j));
  return out;
}

ThresholdedBelief BeliefField::at(int i) const {
  return {epsilon, noise_sd, prior_density[i], mean[i], sd[i]};
}

namespace {

template <class F>
Vector map_field(const BeliefField& bf, F&& fn) {
  Vector out(bf.size());
  for (int i = 0; i < bf.size(); ++i) out[i] = fn(bf.at(i));
  return out;
}

}  // namespace

Vector BeliefField::a() const { return map_field(*this, [](const ThresholdedBelief& b) { return a_t(b); }); }

Vector BeliefField::unnorm_mean() const {
  return map_field(*this, [](const ThresholdedBelief& b) { return babc::unnorm_mean(b); });
}

Vector BeliefField::unnorm_median() const {
  return map_field(*this, [](const ThresholdedBelief& b) { return babc::unnorm_median(b); });
}

Vector BeliefField::unnorm_quantile(double alpha) const {
  return map_field(*this, [alpha](const ThresholdedBelief& b) { return babc::unnorm_quantile(b, alpha); });
}

Vector BeliefField::unnorm_variance() const {
  return map_field(*this, [](const ThresholdedBelief& b) { return babc::unnorm_variance(b); });
}

Vector BeliefField::unnorm_mad() const {
  return map_field(*this, [](const ThresholdedBelief& b) { return babc::unnorm_mad(b); });
}

Vector BeliefField::estimate(Estimator e) const { return e == Estimator::Mean ? unnorm_mean() : unnorm_median(); }

Vector BeliefField::log_estimate(Estimator e) const {
  if (e == Estimator::Mean) return map_field(*this, [](const ThresholdedBelief& b) { return log_unnorm_mean(b); });
  return map_field(*this, [](const ThresholdedBelief& b) { return log_unnorm_median(b); });
}

}  // namespace babc
