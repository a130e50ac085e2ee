#pragma once

#include "babc/abcmodel.hpp"
#include "babc/gp.hpp"
#include "babc/sampling.hpp"
#include "babc/types.hpp"

#include <functional>
#include <string>

namespace babc {

enum class AcquisitionKind { MAXV, MAXMAD, EIV, EIMAD, RAND, LCB };

std::string to_string(AcquisitionKind kind);
/// Case-insensitive; throws ConfigError for unknown names.
AcquisitionKind parse_acquisition(const std::string& name);
/// Mean for the variance family and RAND, median for the MAD family.
Estimator estimator_for(AcquisitionKind kind);
[[nodiscard]] inline bool is_expected_loss(AcquisitionKind k) {
  return k == AcquisitionKind::EIV || k == AcquisitionKind::EIMAD;
}

/// Points and weights used to approximate integrals over the parameter box.
/// Grid: cell midpoints with cell volumes as weights. ImportanceSampling: normalised weights.
struct IntegrationBackend {
  enum class Type { Grid, ImportanceSampling };
  Type type = Type::Grid;
  PointSet points;
  Vector weights;
  int resolution = 0;
  double ess = 0.0;
  bool degenerate = false;  ///< all weight on a single point

  static IntegrationBackend grid(const Box& bounds, int resolution);
  static IntegrationBackend importance(PointSet points, Vector weights);
  void validate() const;
};

/// MAXV: unnorm_variance; MAXMAD: unnorm_mad.
double pointwise_uncertainty(AcquisitionKind kind, const ThresholdedBelief& b);

/// Expected pointwise variance (EIV / MAXV) or MAD (EIMAD / MAXMAD) after a pending batch that
/// reduces the surrogate variance by tau2.
double expected_pointwise_uncertainty(AcquisitionKind kind, const ThresholdedBelief& b, double tau2);

/// Precomputed state for evaluating EIV / EIMAD on a fixed backend.
class ExpectedLoss {
 public:
  /// Backend points whose weighted integrand is below prune_tol times the total are dropped;
  /// the integrand can only shrink as the batch grows, so the error is bounded by that fraction.
  ExpectedLoss(const GpPosterior& post, AcquisitionKind kind, double epsilon, const UniformPrior& prior,
               IntegrationBackend backend, double prune_tol = 1e-13);

  /// Pending points already fixed in the batch.
  struct Pending {
    QueryFeatures features;
    Eigen::LLT<Matrix> chol;  // c(P, P) + sigma_n^2 I
    Matrix u;                 // L_P^{-1} c(P, active)
    Vector tau2;              // at the active points
    Vector g;                 // integrand at tau2
    [[nodiscard]] int size() const { return static_cast<int>(features.points.cols()); }
  };

  [[nodiscard]] Pending empty_pending() const;
  [[nodiscard]] Pending extend(const Pending& fixed, const Vector& theta) const;

  /// Loss with no pending points (the current Bayes risk on this backend).
  [[nodiscard]] double baseline() const;
  /// L_t(theta*) approximated on the backend.
  [[nodiscard]] double value(const PointSet& pending) const;
  /// L_t(fixed + {c}) for each column c of candidates.
  [[nodiscard]] Vector value_appended(const Pending& fixed, const PointSet& candidates) const;
  /// Sum of weight * integrand for an explicit tau2 over the active points.
  [[nodiscard]] double integrate(const Vector& tau2) const;

  [[nodiscard]] AcquisitionKind kind() const { return kind_; }
  [[nodiscard]] const IntegrationBackend& backend() const { return backend_; }
  [[nodiscard]] int active_count() const { return static_cast<int>(active_.size()); }

 private:
  const GpPosterior* post_;
  AcquisitionKind kind_;
  IntegrationBackend backend_;
  std::vector<Eigen::Index> active_;
  QueryFeatures feats_;  // at the active points
  BeliefField belief_;   // at the active points
  Vector weights_;       // at the active points
  Vector base_;          // integrand at tau2 = 0
};

struct BackendOptions {
  int grid_resolution = 50;
  int is_points = 500;
  int mcmc_chains = 4;
  int mcmc_length = 1000;
};

/// Grid backend for p <= 2; otherwise importance sampling from the current loss integrand
/// treated as an unnormalised density (adaptive MCMC, thinned), with weights 1/q.
IntegrationBackend prepare_backend(const GpPosterior& post, AcquisitionKind kind, double epsilon,
                                   const UniformPrior& prior, const BackendOptions& options, Rng& rng);

struct OptimizeOptions {
  int random_points = 0;  ///< 0: 1000 for p <= 2, 2000 otherwise
  int refine = 10;
  int local_iterations = 50;
};

struct OptimizeResult {
  Vector x;
  double value = 0.0;
  bool clipped = false;
  int evaluations = 0;
};

using BatchObjective = std::function<Vector(const PointSet&)>;

/// Maximises the objective: uniform random search followed by bounded quasi-Newton refinement
/// (finite-difference gradients) of the best candidates. Ties go to the lowest index.
OptimizeResult optimize_acquisition(const BatchObjective& objective, const Box& bounds, Rng& rng,
                                    const OptimizeOptions& options = {});
OptimizeResult optimize_acquisition(const std::function<double(const Vector&)>& objective, const Box& bounds,
                                    Rng& rng, const OptimizeOptions& options = {});

struct CandidateBatch {
  PointSet points;
  Vector values;  ///< loss (EIV/EIMAD), uncertainty (MAXV/MAXMAD), m - beta s (LCB), 0 (RAND)
  AcquisitionKind kind = AcquisitionKind::RAND;
  int iteration = 0;
  int clipped = 0;
};

struct AcquisitionContext {
  const GpPosterior* post = nullptr;
  double epsilon = 0.0;
  UniformPrior prior;
  const ExpectedLoss* loss = nullptr;  ///< required for EIV / EIMAD
  double lcb_beta = 0.0;
  OptimizeOptions optimizer;
};

/// Greedy batch construction: each new point optimises the acquisition with the earlier
/// batch points held fixed.
CandidateBatch greedy_batch(AcquisitionKind kind, const AcquisitionContext& ctx, int b, Rng& rng);

/// Index of the grid point minimising m - beta s (lowest index on ties).
Eigen::Index lcb_select(const GpPosterior& post, double beta, const PointSet& grid);
/// Continuous version over the box.
Vector lcb_select(const GpPosterior& post, double beta, const Box& bounds, Rng& rng);

}  // namespace babc
