#pragma once

#include "babc/gp.hpp"
#include "babc/sampling.hpp"
#include "babc/types.hpp"

#include <string>
#include <vector>

namespace babc {

struct UqConfig {
  int sample_paths = 2000;
  int grid_resolution = 80;
  int is_thinned = 7500;
  double alpha = 0.95;
  int mcmc_chains = 15;
  int mcmc_length = 20000;
  bool keep_paths = false;

  void validate() const;
};

/// Weighted sample sets sharing one set of points: row i of weights is the normalised
/// ABC posterior implied by the i-th GP sample path.
struct PosteriorEnsemble {
  std::string backend;  ///< "grid" or "is"
  PointSet points;
  Matrix weights;       ///< s x n, rows sum to 1
  Vector ess;           ///< per path
  Matrix paths;         ///< s x n f-draws, only if keep_paths
  int thinned_count = 0;
  bool degenerate = false;  ///< median per-path ESS below 50 (IS only)
  std::vector<std::string> warnings;
};

/// Grid backend (p <= 2): joint paths at the n^p cell midpoints.
PosteriorEnsemble quantify_grid(const GpPosterior& post, double epsilon, double noise_sd, const UniformPrior& prior,
                                const UqConfig& config, Rng& rng);

/// Importance-sampling backend: points from the alpha-quantile surface by adaptive MCMC,
/// thinned, then per-path self-normalised weights.
PosteriorEnsemble quantify_is(const GpPosterior& post, double epsilon, double noise_sd, const UniformPrior& prior,
                              const UqConfig& config, Rng& rng);

/// Per-path normalised weights from f-draws; log_base holds log(prior * cell weight / instrumental).
Matrix path_weights(const Matrix& paths, const Vector& log_base, double epsilon, double noise_sd, Vector* ess);

struct Interval {
  double mean = 0.0;
  double lower = 0.0;  ///< 2.5% across paths
  double upper = 0.0;  ///< 97.5% across paths
};

struct MomentSummary {
  std::vector<Interval> expectation;  ///< one per dimension
  std::vector<Interval> variance;
  Matrix path_expectations;           ///< s x p
};

MomentSummary ensemble_moments(const PosteriorEnsemble& ens);

struct MarginalBands {
  Vector grid;
  Matrix curves;  ///< s x g
  Vector median;
  Vector lower;
  Vector upper;
  bool point_mass = false;
};

MarginalBands ensemble_marginals(const PosteriorEnsemble& ens, int dim, const Vector& eval_grid);

/// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(Vector values, double q);

}  // namespace babc
