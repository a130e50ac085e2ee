#pragma once

#include "babc/acquisition.hpp"
#include "babc/config.hpp"
#include "babc/gp.hpp"
#include "babc/sampling.hpp"
#include "babc/simulators.hpp"
#include "babc/uq.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace babc {

/// Reference posterior used for TV. Toy problems with p <= 2: exact grid density from the
/// known f. Otherwise: ABC-MCMC samples with per-dimension marginal KDEs.
struct GroundTruth {
  int dim = 0;
  bool on_grid = false;
  GridEvaluation grid;          ///< values are normalised probabilities per cell
  PointSet samples;             ///< ABC-MCMC samples (sample-based truth)
  std::vector<Vector> marginal_grids;
  std::vector<Vector> marginal_density;
  double acceptance_rate = 0.0;
  std::vector<std::string> warnings;
};

GroundTruth ground_truth(const ExperimentConfig& config);
/// Sample-based truth is cached as CSV when config.truth_cache is set.
GroundTruth ground_truth_cached(const ExperimentConfig& config);

/// Normalised cell probabilities pi(theta) Phi((eps - f) / sigma_n) on the grid.
Vector grid_density(const GridEvaluation& grid, const std::function<Vector(const PointSet&)>& unnorm);

/// Half the L1 distance between two densities on a common grid with cell weights; each
/// density is first normalised so that sum(value * weight) = 1.
double tv_distance(const Vector& a, const Vector& b, const Vector& cell_weights);
/// Mean over dimensions of the marginal TV between weighted samples (KDE) and the truth marginals.
double tv_marginals(const PointSet& samples, const Vector& weights, const GroundTruth& truth);

struct UqCheckpoint {
  int iteration = 0;
  std::string backend;
  MomentSummary moments;
  double median_ess = 0.0;
  std::vector<std::string> warnings;
};

struct IterationRecord {
  int iteration = 0;
  int dataset_size = 0;
  PointSet batch;
  Vector acq_values;
  GpHyper hyper;  ///< hyperparameters fitted after this batch was merged
  bool map_improved = false;
  int clipped = 0;
  double tv = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct RunRecord {
  ExperimentConfig config;
  std::string simulator;
  double epsilon = 0.0;
  int initial_size = 0;
  DiscrepancyDataset data;
  GpHyper initial_hyper;
  double initial_tv = std::numeric_limits<double>::quiet_NaN();
  std::vector<IterationRecord> iterations;
  GpHyper final_hyper;
  PointSet posterior_samples;
  double final_tv = std::numeric_limits<double>::quiet_NaN();
  double posterior_acceptance = 0.0;
  std::vector<UqCheckpoint> uq;
  std::vector<std::string> warnings;
  bool aborted = false;
  std::string abort_reason;
  double seconds = 0.0;
};

/// Batch simulation with up to `threads` calls in flight; simulation k of the run uses the
/// substream ("simulator", k) and one retry on ("simulator-retry", k). Results keep batch order.
Vector simulate_batch(const Simulator& sim, const PointSet& points, std::uint64_t seed, int first_index, int threads);

/// Runs the full design loop. If truth is given, TV is tracked per config.tv_every.
RunRecord run_inference(const ExperimentConfig& config, const GroundTruth* truth = nullptr);

/// Builds the problem named in the config with box/epsilon overrides applied.
Simulator resolve_simulator(const ExperimentConfig& config);

/// MCMC samples from the point estimate (mean or median) of the ABC posterior.
McmcResult sample_estimate(const GpPosterior& post, const Simulator& sim, Estimator estimator, int chains,
                           int length, Rng& rng);

struct RepeatSummary {
  std::vector<int> iterations;  ///< 1..T
  Vector median, q05, q95;
  double initial_median = std::numeric_limits<double>::quiet_NaN();
  double final_median = std::numeric_limits<double>::quiet_NaN();
  Vector final_tvs;             ///< per completed run
  Vector initial_tvs;
  int aborted = 0;
  std::vector<RunRecord> runs;
};

/// Seeded repetitions (seeds default to config.seed + r); aborted runs are excluded and counted.
RepeatSummary repeat_experiment(const ExperimentConfig& config, int runs, const GroundTruth& truth,
                                const std::vector<std::uint64_t>& seeds = {});

}  // namespace babc
