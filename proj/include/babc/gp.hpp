#pragma once

#include "babc/types.hpp"

#include <optional>
#include <vector>

namespace babc {

/// Evaluated design {(theta_i, Delta_i)}; points are stored column-wise.
struct DiscrepancyDataset {
  PointSet points;
  Vector values;
  Box bounds;

  DiscrepancyDataset() = default;
  DiscrepancyDataset(PointSet pts, Vector vals, Box box);

  [[nodiscard]] int size() const { return static_cast<int>(values.size()); }
  [[nodiscard]] int dim() const { return bounds.dim(); }
  void append(const Vector& theta, double delta);
  void append(const PointSet& thetas, const Vector& deltas);
  /// First n observations, in insertion order.
  [[nodiscard]] DiscrepancyDataset prefix(int n) const;
  void validate() const;
};

/// Hyperparameters of the squared-exponential kernel plus Gaussian noise.
struct GpHyper {
  double noise_var = 1.0;
  double signal_var = 1.0;
  Vector lengthscales;

  void validate(int dim) const;
  [[nodiscard]] double noise_sd() const;
};

/// Explicit basis for the hierarchical mean: constant, optionally linear and
/// quadratic terms per coordinate, with a Gaussian prior N(b, B) on the coefficients.
struct BasisSpec {
  int degree = 2;  ///< 0: constant, 1: + linear, 2: + squares (r = 2p + 1)
  Vector prior_mean;
  Matrix prior_cov;

  /// The default used throughout: 1, theta_i, theta_i^2 with b = 0 and B = variance * I.
  static BasisSpec quadratic(int dim, double prior_variance = 100.0);
  static BasisSpec of_degree(int dim, int degree, double prior_variance);

  [[nodiscard]] int size(int dim) const;
  /// r x n matrix of basis functions evaluated at the columns of x.
  [[nodiscard]] Matrix evaluate(const PointSet& x) const;
  void validate(int dim) const;
};

/// Squared-exponential ARD kernel matrix k(x_i, y_j).
Matrix se_kernel(const PointSet& x, const PointSet& y, const GpHyper& hyper);

/// Cached per-query quantities. With V = L^{-1} k_t(X) and W = L_A^{-1} R_t(X),
/// the posterior covariance is c_t(X, Y) = k(X, Y) - V_X^T V_Y + W_X^T W_Y.
struct QueryFeatures {
  PointSet points;
  Matrix v;
  Matrix w;
  Vector mean;
  Vector var;
};

struct Prediction {
  Vector mean;
  Matrix cov;
};

/// Posterior of the discrepancy mean function f given D_t under the hierarchical GP
/// prior with the basis coefficients marginalised. Immutable after fit; all const
/// members are safe to call concurrently.
class GpPosterior {
 public:
  static GpPosterior fit(const DiscrepancyDataset& data, const GpHyper& hyper, const BasisSpec& basis);

  [[nodiscard]] const DiscrepancyDataset& data() const { return data_; }
  [[nodiscard]] const GpHyper& hyper() const { return hyper_; }
  [[nodiscard]] const BasisSpec& basis() const { return basis_; }
  [[nodiscard]] int dim() const { return data_.dim(); }
  [[nodiscard]] double noise_var() const { return hyper_.noise_var; }
  /// Jitter added to the diagonal of K_t on top of the noise variance (0 normally).
  [[nodiscard]] double jitter() const { return jitter_; }
  /// Generalised least-squares estimate of the basis coefficients.
  [[nodiscard]] const Vector& gls_coefficients() const { return gamma_; }

  /// Mean vector and full covariance matrix at the query points.
  [[nodiscard]] Prediction predict(const PointSet& query) const;
  /// Mean and marginal variance only; variances are clamped at zero.
  void predict_marginal(const PointSet& query, Vector& mean, Vector& var) const;
  [[nodiscard]] Vector predict_mean(const PointSet& query) const;

  [[nodiscard]] QueryFeatures features(const PointSet& query) const;
  /// c_t(X, Y) from two feature blocks.
  [[nodiscard]] Matrix covariance(const QueryFeatures& x, const QueryFeatures& y) const;

  /// tau^2_t(theta; pending) = c(theta, P) [c(P, P) + sigma_n^2 I]^{-1} c(P, theta).
  [[nodiscard]] double lookahead_var_reduction(const Vector& theta, const PointSet& pending) const;
  /// Vectorised form over the columns of query.
  [[nodiscard]] Vector lookahead_var_reduction(const QueryFeatures& query, const QueryFeatures& pending) const;

  /// count x n matrix; row i is one joint draw of f at the eval points.
  [[nodiscard]] Matrix sample_paths(const PointSet& eval_points, int count, Rng& rng) const;

 private:
  DiscrepancyDataset data_;
  GpHyper hyper_;
  BasisSpec basis_;
  Eigen::LLT<Matrix> chol_k_;   // K_t = k(X, X) + (sigma_n^2 + jitter) I
  Eigen::LLT<Matrix> chol_a_;   // A = B^{-1} + H K^{-1} H^T
  Matrix g_;                    // L^{-1} H^T  (t x r)
  Vector alpha_;                // K^{-1} Delta
  Vector gamma_;                // GLS estimate
  double jitter_ = 0.0;
};

/// Cholesky with an escalating diagonal jitter ladder (1e-10 ... 1e-4 of the mean
/// diagonal). Returns the jitter actually used; throws IllConditionedError on failure.
double robust_cholesky(const Matrix& m, Eigen::LLT<Matrix>& out, double first_jitter = 0.0);

// ---------------------------------------------------------------------------
// Hyperparameter estimation

/// Normal prior on log(value).
struct LogNormalPrior {
  double log_mean = 0.0;
  double log_sd = 1.0;

  [[nodiscard]] double log_density_of_log(double log_value) const;
};

/// Priors on (sigma_n, sigma_f, lengthscales), each log-normal in the standard deviation
/// or lengthscale.
struct HyperPriors {
  LogNormalPrior noise_sd;
  LogNormalPrior signal_sd;
  std::vector<LogNormalPrior> lengthscales;

  /// Scale-aware defaults: lengthscales centred at half the box width, sigma_f at the
  /// sample sd of Delta, sigma_n at a tenth of it; unit log-sd throughout.
  static HyperPriors defaults_for(const DiscrepancyDataset& data);
  [[nodiscard]] GpHyper mode() const;
  [[nodiscard]] GpHyper draw(Rng& rng) const;
};

/// log p(Delta | psi) with the basis coefficients integrated out. If grad is given it
/// receives the gradient with respect to (log sigma_n, log sigma_f, log l_1..l_p).
double log_marginal_likelihood(const DiscrepancyDataset& data, const BasisSpec& basis, const GpHyper& hyper,
                               Vector* grad = nullptr);

/// MAP objective: log marginal likelihood plus log hyperpriors, in the log parameterisation.
double map_objective(const DiscrepancyDataset& data, const BasisSpec& basis, const HyperPriors& priors,
                     const GpHyper& hyper, Vector* grad = nullptr);

struct MapOptions {
  int restarts = 10;        ///< total local searches: init plus (restarts - 1) prior draws
  int max_iterations = 100;
};

struct MapResult {
  GpHyper hyper;
  double objective = 0.0;
  double init_objective = 0.0;
  bool improved = false;  ///< false: every restart failed, hyper == init (warning)
  int successful_restarts = 0;
};

MapResult map_hyperparameters(const DiscrepancyDataset& data, const BasisSpec& basis, const HyperPriors& priors,
                              const GpHyper& init, Rng& rng, const MapOptions& options = {});

/// Conversions between hyperparameters and the unconstrained log vector.
Vector hyper_to_log(const GpHyper& h);
GpHyper hyper_from_log(const Vector& x);

}  // namespace babc
