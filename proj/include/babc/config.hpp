#pragma once

#include "babc/acquisition.hpp"
#include "babc/uq.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace babc {

struct ExperimentConfig {
  std::string simulator = "gaussian";
  std::optional<Vector> prior_lower;  ///< override the simulator's box
  std::optional<Vector> prior_upper;
  std::optional<double> epsilon;      ///< override the simulator's threshold

  AcquisitionKind acquisition = AcquisitionKind::EIV;
  double lcb_beta = 2.0;
  int batch_size = 1;
  int initial_size = 0;  ///< 0: 10 for p <= 2, 20 otherwise
  int iterations = 100;
  std::uint64_t seed = 1;

  BackendOptions backend;
  OptimizeOptions optimizer;

  /// Full multistart MAP every map_every iterations; in between a single local search
  /// warm-started at the previous hyperparameters.
  int map_restarts = 10;
  int map_every = 1;
  int map_max_iterations = 100;
  int map_warm_iterations = 30;

  int final_chains = 8;
  int final_chain_length = 10000;
  int posterior_samples = 10000;

  /// TV against the ground truth every tv_every iterations (0: final only; -1: never).
  int tv_every = 1;
  int tv_grid_resolution = 100;
  int tv_marginal_points = 200;

  int truth_chains = 8;
  int truth_length = 20000;
  int truth_samples = 10000;
  std::string truth_cache;

  std::vector<int> uq_checkpoints;
  UqConfig uq;

  int threads = 1;
  std::string output_dir;

  [[nodiscard]] int resolved_initial_size(int dim) const;
  /// Throws ConfigError on any violated invariant.
  void validate(int dim) const;
};

/// JSON round trip. Unknown keys raise ConfigError.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& config);
/// Applies key=value where value is parsed as JSON when possible, otherwise as a string.
void apply_override(ExperimentConfig& config, const std::string& assignment);

}  // namespace babc
