#include "babc/config.hpp"

#include "babc/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace babc {

using nlohmann::json;

int ExperimentConfig::resolved_initial_size(int dim) const {
  if (initial_size > 0) return initial_size;
  return dim <= 2 ? 10 : 20;
}

void ExperimentConfig::validate(int dim) const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (resolved_initial_size(dim) < dim + 2) throw ConfigError("initial_size must be >= p + 2");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (acquisition == AcquisitionKind::LCB && batch_size != 1) throw ConfigError("LCB supports batch_size 1 only");
  if (!std::isfinite(lcb_beta)) throw ConfigError("lcb_beta must be finite");
  if (prior_lower.has_value() != prior_upper.has_value()) {
    throw ConfigError("prior_lower and prior_upper must be given together");
  }
  if (prior_lower && (prior_lower->size() != dim || prior_upper->size() != dim)) {
    throw ConfigError("prior bounds do not match the simulator dimension");
  }
  if (prior_lower && ((prior_upper->array() <= prior_lower->array()).any())) {
    throw ConfigError("prior_upper must exceed prior_lower");
  }
  if (backend.grid_resolution < 10) throw ConfigError("backend_grid_resolution must be >= 10");
  if (backend.is_points < 1 || backend.mcmc_chains < 1 || backend.mcmc_length < 10) {
    throw ConfigError("invalid importance-sampling backend settings");
  }
  if (map_restarts < 1 || map_every < 1 || map_max_iterations < 1 || map_warm_iterations < 1) {
    throw ConfigError("invalid MAP schedule");
  }
  if (final_chains < 1 || final_chain_length < 10 || posterior_samples < 1) {
    throw ConfigError("invalid final sampling settings");
  }
  if (posterior_samples > final_chains * (final_chain_length - final_chain_length / 2)) {
    throw ConfigError("posterior_samples exceeds the retained chain length");
  }
  if (tv_every < -1) throw ConfigError("tv_every must be >= -1");
  if (tv_grid_resolution < 10 || tv_marginal_points < 10) throw ConfigError("TV grids are too coarse");
  if (truth_chains < 1 || truth_length < 10 || truth_samples < 1) throw ConfigError("invalid ground truth settings");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (int c : uq_checkpoints) {
    if (c < 0 || c > iterations) throw ConfigError("uq checkpoint outside [0, iterations]");
  }
  try {
    uq.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

json vec_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["simulator"] = c.simulator;
  j["prior_lower"] = c.prior_lower ? vec_to_json(*c.prior_lower) : json(nullptr);
  j["prior_upper"] = c.prior_upper ? vec_to_json(*c.prior_upper) : json(nullptr);
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
  j["acquisition"] = to_string(c.acquisition);
  j["lcb_beta"] = c.lcb_beta;
  j["batch_size"] = c.batch_size;
  j["initial_size"] = c.initial_size;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["backend_grid_resolution"] = c.backend.grid_resolution;
  j["backend_is_points"] = c.backend.is_points;
  j["backend_mcmc_chains"] = c.backend.mcmc_chains;
  j["backend_mcmc_length"] = c.backend.mcmc_length;
  j["optimizer_random_points"] = c.optimizer.random_points;
  j["optimizer_refine"] = c.optimizer.refine;
  j["optimizer_local_iterations"] = c.optimizer.local_iterations;
  j["map_restarts"] = c.map_restarts;
  j["map_every"] = c.map_every;
  j["map_max_iterations"] = c.map_max_iterations;
  j["map_warm_iterations"] = c.map_warm_iterations;
  j["final_chains"] = c.final_chains;
  j["final_chain_length"] = c.final_chain_length;
  j["posterior_samples"] = c.posterior_samples;
  j["tv_every"] = c.tv_every;
  j["tv_grid_resolution"] = c.tv_grid_resolution;
  j["tv_marginal_points"] = c.tv_marginal_points;
  j["truth_chains"] = c.truth_chains;
  j["truth_length"] = c.truth_length;
  j["truth_samples"] = c.truth_samples;
  j["truth_cache"] = c.truth_cache;
  j["uq_checkpoints"] = c.uq_checkpoints;
  j["uq_sample_paths"] = c.uq.sample_paths;
  j["uq_grid_resolution"] = c.uq.grid_resolution;
  j["uq_is_thinned"] = c.uq.is_thinned;
  j["uq_alpha"] = c.uq.alpha;
  j["uq_mcmc_chains"] = c.uq.mcmc_chains;
  j["uq_mcmc_length"] = c.uq.mcmc_length;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  return j;
}

void set_key(ExperimentConfig& c, const std::string& key, const json& v) {
  try {
    if (key == "simulator") c.simulator = v.get<std::string>();
    else if (key == "prior_lower") c.prior_lower = v.is_null() ? std::nullopt : std::optional<Vector>(vec_from_json(v));
    else if (key == "prior_upper") c.prior_upper = v.is_null() ? std::nullopt : std::optional<Vector>(vec_from_json(v));
    else if (key == "epsilon") c.epsilon = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    else if (key == "acquisition") c.acquisition = parse_acquisition(v.get<std::string>());
    else if (key == "lcb_beta") c.lcb_beta = v.get<double>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "initial_size") c.initial_size = v.get<int>();
    else if (key == "iterations") c.iterations = v.get<int>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "backend_grid_resolution") c.backend.grid_resolution = v.get<int>();
    else if (key == "backend_is_points") c.backend.is_points = v.get<int>();
    else if (key == "backend_mcmc_chains") c.backend.mcmc_chains = v.get<int>();
    else if (key == "backend_mcmc_length") c.backend.mcmc_length = v.get<int>();
    else if (key == "optimizer_random_points") c.optimizer.random_points = v.get<int>();
    else if (key == "optimizer_refine") c.optimizer.refine = v.get<int>();
    else if (key == "optimizer_local_iterations") c.optimizer.local_iterations = v.get<int>();
    else if (key == "map_restarts") c.map_restarts = v.get<int>();
    else if (key == "map_every") c.map_every = v.get<int>();
    else if (key == "map_max_iterations") c.map_max_iterations = v.get<int>();
    else if (key == "map_warm_iterations") c.map_warm_iterations = v.get<int>();
    else if (key == "final_chains") c.final_chains = v.get<int>();
    else if (key == "final_chain_length") c.final_chain_length = v.get<int>();
    else if (key == "posterior_samples") c.posterior_samples = v.get<int>();
    else if (key == "tv_every") c.tv_every = v.get<int>();
    else if (key == "tv_grid_resolution") c.tv_grid_resolution = v.get<int>();
    else if (key == "tv_marginal_points") c.tv_marginal_points = v.get<int>();
    else if (key == "truth_chains") c.truth_chains = v.get<int>();
    else if (key == "truth_length") c.truth_length = v.get<int>();
    else if (key == "truth_samples") c.truth_samples = v.get<int>();
    else if (key == "truth_cache") c.truth_cache = v.get<std::string>();
    else if (key == "uq_checkpoints") c.uq_checkpoints = v.get<std::vector<int>>();
    else if (key == "uq_sample_paths") c.uq.sample_paths = v.get<int>();
    else if (key == "uq_grid_resolution") c.uq.grid_resolution = v.get<int>();
    else if (key == "uq_is_thinned") c.uq.is_thinned = v.get<int>();
    else if (key == "uq_alpha") c.uq.alpha = v.get<double>();
    else if (key == "uq_mcmc_chains") c.uq.mcmc_chains = v.get<int>();
    else if (key == "uq_mcmc_length") c.uq.mcmc_length = v.get<int>();
    else if (key == "threads") c.threads = v.get<int>();
    else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) set_key(c, key, value);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& config) { return to_json(config).dump(2); }

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  set_key(config, key, value);
}

}  // namespace babc
