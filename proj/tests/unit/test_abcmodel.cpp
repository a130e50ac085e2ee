#include "babc/abcmodel.hpp"
#include "babc/error.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace babc;

namespace {

ThresholdedBelief random_belief(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ThresholdedBelief b;
  b.epsilon = 0.5 + u(rng);
  b.noise_sd = 0.2 + 0.8 * u(rng);
  b.prior_density = 0.5 + u(rng);
  b.mean = b.epsilon + 3.0 * (u(rng) - 0.5);
  b.sd = 0.1 + 1.5 * u(rng);
  return b;
}

}  // namespace

TEST_CASE("mean and median of the thresholded belief") {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const ThresholdedBelief b = random_belief(rng);
    std::normal_distribution<double> z(0.0, 1.0);
    const int n = 200000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += b.prior_density * oracle::phi_cdf((b.epsilon - b.mean - b.sd * z(rng)) / b.noise_sd);
    const double se = std::sqrt(unnorm_variance(b) / n);
    CHECK(std::fabs(s / n - unnorm_mean(b)) < 4.0 * se + 1e-12);
    CHECK(unnorm_median(b) == doctest::Approx(b.prior_density * oracle::phi_cdf((b.epsilon - b.mean) / b.noise_sd)));
    CHECK(unnorm_quantile(b, 0.5) == doctest::Approx(unnorm_median(b)).epsilon(1e-14));
  }
}

TEST_CASE("variance and MAD agree with Monte Carlo") {
  Rng rng(2);
  for (int i = 0; i < 15; ++i) {
    const ThresholdedBelief b = random_belief(rng);
    const oracle::RiskMc mc = oracle::risk_mc(b.epsilon, b.noise_sd, b.prior_density, b.mean, b.sd, 200000, rng);
    INFO("belief " << i);
    CHECK(std::fabs(unnorm_variance(b) - mc.var) < 4.0 * mc.var_se);
    CHECK(std::fabs(unnorm_mad(b) - mc.mad) < 4.0 * mc.mad_se);
  }
}

TEST_CASE("quantiles are monotone in alpha and match empirical quantiles") {
  Rng rng(3);
  const ThresholdedBelief b = random_belief(rng);
  double prev = -1.0;
  for (double a = 0.01; a < 1.0; a += 0.07) {
    const double q = unnorm_quantile(b, a);
    CHECK(q >= prev);
    prev = q;
  }
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(50000);
  for (auto& x : v) x = b.prior_density * oracle::phi_cdf((b.epsilon - b.mean - b.sd * z(rng)) / b.noise_sd);
  std::sort(v.begin(), v.end());
  for (double a : {0.1, 0.9}) {
    const auto k = static_cast<std::size_t>(a * v.size());
    CHECK(unnorm_quantile(b, a) >= v[k - 300]);
    CHECK(unnorm_quantile(b, a) <= v[k + 300]);
  }
  CHECK_THROWS_AS(unnorm_quantile(b, 0.0), DomainError);
  CHECK_THROWS_AS(unnorm_quantile(b, 1.0), DomainError);
}

TEST_CASE("degenerate beliefs") {
  ThresholdedBelief b;
  b.epsilon = 1.0;
  b.noise_sd = 0.5;
  b.prior_density = 2.0;
  b.mean = 0.3;
  b.sd = 0.0;
  CHECK(unnorm_variance(b) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(unnorm_mad(b) == 0.0);
  CHECK(unnorm_mean(b) == doctest::Approx(true_unnorm_density(0.3, 1.0, 0.5, 2.0)));
  b.prior_density = 0.0;
  CHECK(unnorm_mean(b) == 0.0);
  CHECK(log_unnorm_mean(b) == -std::numeric_limits<double>::infinity());
  b.prior_density = 1.0;
  b.noise_sd = 0.0;
  CHECK_THROWS_AS(b.validate(), DomainError);
}

TEST_CASE("log estimates stay finite where the estimates underflow") {
  ThresholdedBelief b;
  b.epsilon = 0.0;
  b.noise_sd = 0.1;
  b.prior_density = 1.0;
  b.mean = 100.0;
  b.sd = 0.5;
  CHECK(unnorm_mean(b) == 0.0);
  CHECK(std::isfinite(log_unnorm_mean(b)));
  CHECK(std::isfinite(log_unnorm_median(b)));
  CHECK(std::isfinite(log_unnorm_quantile(b, 0.95)));
  b.mean = 1.0;
  CHECK(log_unnorm_mean(b) == doctest::Approx(std::log(unnorm_mean(b))).epsilon(1e-12));
  CHECK(log_unnorm_quantile(b, 0.3) == doctest::Approx(std::log(unnorm_quantile(b, 0.3))).epsilon(1e-12));
}

TEST_CASE("belief field agrees with the scalar formulas") {
  Rng rng(4);
  const Box box(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0));
  const PointSet x = box.sample(rng, 12);
  Vector y(12);
  for (int j = 0; j < 12; ++j) y[j] = x.col(j).squaredNorm();
  GpHyper h;
  h.noise_var = 0.04;
  h.signal_var = 1.0;
  h.lengthscales = Vector::Constant(2, 1.0);
  const GpPosterior post = GpPosterior::fit({x, y, box}, h, BasisSpec::quadratic(2));
  const UniformPrior prior{box};
  const PointSet q = box.sample(rng, 9);
  const BeliefField f = BeliefField::from_posterior(post, 0.8, prior, q);
  const BeliefField g = BeliefField::from_features(post.features(q), 0.8, h.noise_sd(), prior);
  CHECK((f.mean - g.mean).cwiseAbs().maxCoeff() < 1e-14);
  for (int i = 0; i < 9; ++i) {
    const ThresholdedBelief b = f.at(i);
    CHECK(b.prior_density == doctest::Approx(1.0 / 16.0));
    CHECK(f.unnorm_variance()[i] == doctest::Approx(unnorm_variance(b)));
    CHECK(f.unnorm_mad()[i] == doctest::Approx(unnorm_mad(b)));
    CHECK(f.estimate(Estimator::Median)[i] == doctest::Approx(unnorm_median(b)));
    CHECK(f.unnorm_quantile(0.95)[i] == doctest::Approx(unnorm_quantile(b, 0.95)));
    CHECK(std::exp(f.log_estimate(Estimator::Mean)[i]) == doctest::Approx(unnorm_mean(b)).epsilon(1e-12));
  }
}
