#pragma once

#include "babc/types.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace babc {

/// Log density evaluated at the columns of a point set, returning one value per column.
/// -inf marks points outside the support.
using BatchLogDensity = std::function<Vector(const PointSet&)>;
using LogDensity = std::function<double(const Vector&)>;

struct McmcConfig {
  int chain_count = 8;
  int chain_length = 20000;
  double burn_in = 0.5;
  /// Initial proposal sd as a fraction of the box width per coordinate.
  double initial_scale = 0.05;
  /// Proposal covariance adapts from this step on.
  int adaptation_start = 200;
  Vector start;
  /// Known log density at start; NaN means evaluate it. Pseudo-marginal targets set this
  /// so that the start is not re-simulated.
  double start_log_density = std::numeric_limits<double>::quiet_NaN();
  Box bounds;

  void validate() const;
};

struct McmcResult {
  PointSet samples;           ///< post burn-in draws, chains concatenated in chain order
  Vector log_density;         ///< log density at each retained sample
  double acceptance_rate = 0.0;
  bool low_acceptance = false;  ///< acceptance below 1% after burn-in
};

/// Haario-style adaptive Metropolis. Chains start at config.start and run in lockstep so
/// that each step evaluates all chains' proposals in one batch call. Each chain owns an
/// independent random stream derived from rng. Proposals outside config.bounds are rejected.
McmcResult adaptive_metropolis(const BatchLogDensity& log_density, const McmcConfig& config, Rng& rng);
McmcResult adaptive_metropolis(const LogDensity& log_density, const McmcConfig& config, Rng& rng);

/// Midpoint grid over a box with resolution^p cells; the first coordinate varies fastest.
struct GridEvaluation {
  PointSet points;
  Vector values;
  Vector weights;  ///< cell volumes; they sum to the box volume
  int resolution = 0;
};

GridEvaluation grid_points(const Box& bounds, int resolution);
/// fn is evaluated on the whole grid at once.
GridEvaluation grid_evaluate(const std::function<Vector(const PointSet&)>& fn, const Box& bounds, int resolution);

struct WeightedSamples {
  PointSet points;
  Vector weights;
  double ess = 0.0;
};

/// Weights proportional to exp(log_target - log_instrumental), normalised in the log domain.
WeightedSamples self_normalized_is(const PointSet& points, const Vector& log_target, const Vector& log_instrumental);

/// Effective sample size 1 / sum(w^2) of normalised weights.
double effective_sample_size(const Vector& weights);

/// Evenly strided indices floor((k + 1) n / target) - 1, k = 0..target-1.
std::vector<Eigen::Index> thin_indices(Eigen::Index n, Eigen::Index target);
PointSet thin(const PointSet& samples, Eigen::Index target);

struct KdeResult {
  Vector density;
  double bandwidth = 0.0;
  bool point_mass = false;  ///< zero weighted variance; a fallback bandwidth was used
};

/// Weighted Gaussian KDE with bandwidth 1.06 * sd_w * ESS^(-1/5).
KdeResult weighted_kde_1d(const Vector& points, const Vector& weights, const Vector& eval_grid);

}  // namespace babc
