#pragma once

#include "babc/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace babc {

/// A benchmark problem: uniform prior box, a stochastic discrepancy generator and a
/// threshold. Toy problems also expose their noise-free mean function.
struct Simulator {
  std::string name;
  Box bounds;
  Vector theta_true;
  double epsilon = 0.0;
  double noise_sd = 0.0;                         ///< known noise level (toy problems), else 0
  std::function<double(const Vector&)> mean_fn;  ///< known f (toy problems), else empty
  std::function<double(const Vector&, Rng&)> discrepancy;

  [[nodiscard]] int dim() const { return bounds.dim(); }
  [[nodiscard]] bool has_known_f() const { return static_cast<bool>(mean_fn); }
  [[nodiscard]] UniformPrior prior() const { return UniformPrior{bounds}; }
};

// ---------------------------------------------------------------------------
// Two-dimensional toy landscapes on [-16, 16]^2 with Delta = f(theta) + N(0, sigma_n^2).
//
//   gaussian:   f = 0.5 theta^T S^{-1} theta,  S = [[4, 2], [2, 4]]
//   bimodal:    f = min over c in {(-6, 4), (6, -4)} of |theta - c|^2 / 8
//   banana:     f = 0.5 [(theta_1 / 4)^2 + (theta_2 + 0.2 theta_1^2 - 4)^2]
//   multimodal: f = |theta|^2 / 50 + 1.5 (1 - cos(pi theta_1 / 4) cos(pi theta_2 / 4))
//
// Each has minimum 0; sigma_n = 0.5 and epsilon = 1 throughout.

enum class ToyKind { Gaussian, Bimodal, Banana, Multimodal };

ToyKind parse_toy_kind(const std::string& name);
std::string to_string(ToyKind kind);
double toy2d_mean(ToyKind kind, const Vector& theta);
/// Throws DomainError for theta outside the box.
double toy2d_discrepancy(ToyKind kind, const Vector& theta, Rng& rng, double noise_sd = 0.5);
Simulator make_toy2d(ToyKind kind);

/// One-dimensional demo on [0, 4]: f = 3 (theta - 1.7)^2, sigma_n = 0.3, epsilon = 0.5.
Simulator make_demo1d();

// ---------------------------------------------------------------------------
// g-and-k distribution

struct GkParams {
  double a = 3.0;
  double b = 1.0;
  double g = 2.0;
  double k = 0.5;
  double c = 0.8;

  void validate() const;
  static GkParams from_vector(const Vector& theta);
};

/// Quantile function at standard normal deviate z.
double gk_quantile(double z, const GkParams& params);
Vector gk_sample(const GkParams& params, int n, Rng& rng);
/// Octile summaries (L4, L6 - L2, (L6 + L2 - 2 L4) / S_b, (L7 - L5 + L3 - L1) / S_b).
Vector gk_summaries(const Vector& data);
/// i/8 empirical quantiles, i = 1..7 (linear interpolation between order statistics).
Vector octiles(Vector data);

struct MahalanobisSpec {
  Vector observed;
  Matrix weight;
  void validate() const;
};

double mahalanobis_discrepancy(const MahalanobisSpec& spec, const Vector& summaries);

/// Inverse sample covariance of model() draws; a ridge of 1e-8 trace/d is added if the
/// covariance is not positive definite.
Matrix estimate_weight_matrix(const std::function<Vector(Rng&)>& model, int replications, Rng& rng);

struct GaussianityDiagnostic {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::vector<int> histogram;  ///< 20 equal-width bins between the sample min and max
  bool degenerate = false;     ///< zero sample variance
};

GaussianityDiagnostic gaussianity_diagnostic(const std::function<double(Rng&)>& draw, int replications, Rng& rng);

struct GkSetup {
  int observed_size = 10000;
  std::uint64_t observed_seed = 20190101;  ///< fixed seed for the observed data set
  std::uint64_t setup_seed = 7;            ///< weight matrix and pilot draws
  int weight_replications = 500;
  int pilot_draws = 2000;
  double epsilon_quantile = 0.005;
};

struct GkProblem {
  GkSetup setup;
  MahalanobisSpec spec;
  double epsilon = 0.0;
  Box bounds;
  Vector theta_true;
};

/// Builds (and caches per setup) the observed summaries, weight matrix and epsilon.
const GkProblem& gk_problem(const GkSetup& setup = {});
Simulator make_gk(const GkSetup& setup = {});

/// Registry: gaussian, bimodal, banana, multimodal, demo1d, gk.
Simulator make_simulator(const std::string& name);
std::vector<std::string> simulator_names();

}  // namespace babc
