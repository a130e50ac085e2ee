#include "babc/config.hpp"
#include "babc/error.hpp"
#include "babc/harness.hpp"
#include "babc/output.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>

namespace {

using namespace babc;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

ExperimentConfig build_config(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  for (const auto& s : g.overrides) apply_override(c, s);
  if (g.seed) c.seed = *g.seed;
  if (g.out) c.output_dir = *g.out;
  if (g.threads) c.threads = *g.threads;
  c.validate(resolve_simulator(c).dim());
  return c;
}

std::string out_dir(const ExperimentConfig& c, const std::string& fallback) {
  return c.output_dir.empty() ? fallback : c.output_dir;
}

void print_warnings(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

int cmd_run(const Globals& g) {
  const ExperimentConfig c = build_config(g);
  std::optional<GroundTruth> truth;
  if (c.tv_every >= 0) truth = ground_truth_cached(c);
  const RunRecord r = run_inference(c, truth ? &*truth : nullptr);
  const std::string dir = out_dir(c, "babc-run");
  write_run(r, dir);
  print_warnings(r.warnings);
  std::cout << "simulations " << r.data.size() << "\n";
  if (std::isfinite(r.initial_tv)) std::cout << "initial_tv " << r.initial_tv << "\n";
  if (std::isfinite(r.final_tv)) std::cout << "final_tv " << r.final_tv << "\n";
  std::cout << "written to " << dir << "\n";
  if (r.aborted) {
    std::cerr << "run aborted: " << r.abort_reason << '\n';
    return 3;
  }
  return 0;
}

int cmd_repeat(const Globals& g, int runs, bool keep_runs) {
  const ExperimentConfig c = build_config(g);
  if (runs < 3) throw ConfigError("repeat: runs must be >= 3");
  const GroundTruth truth = ground_truth_cached(c);
  const RepeatSummary s = repeat_experiment(c, runs, truth);
  const std::string dir = out_dir(c, "babc-repeat");
  write_repeat(s, dir, keep_runs);
  std::cout << "runs " << s.runs.size() << " aborted " << s.aborted << "\n";
  std::cout << "initial_median_tv " << s.initial_median << "\n";
  std::cout << "final_median_tv " << s.final_median << "\n";
  std::cout << "written to " << dir << "\n";
  return s.runs.empty() ? 3 : 0;
}

int cmd_truth(const Globals& g) {
  const ExperimentConfig c = build_config(g);
  const GroundTruth t = ground_truth_cached(c);
  const std::string dir = out_dir(c, "babc-truth");
  write_truth(t, dir);
  print_warnings(t.warnings);
  std::cout << (t.on_grid ? "grid truth" : "sample truth") << " written to " << dir << "\n";
  return 0;
}

int cmd_uq(const Globals& g, const std::vector<int>& checkpoints) {
  ExperimentConfig c = build_config(g);
  if (!checkpoints.empty()) c.uq_checkpoints = checkpoints;
  if (c.uq_checkpoints.empty()) c.uq_checkpoints = {c.iterations};
  c.tv_every = -1;
  c.validate(resolve_simulator(c).dim());
  const RunRecord r = run_inference(c, nullptr);
  const std::string dir = out_dir(c, "babc-uq");
  write_run(r, dir);
  print_warnings(r.warnings);
  for (const auto& cp : r.uq) {
    std::cout << "iteration " << cp.iteration << " (" << cp.backend << ")\n";
    for (std::size_t d = 0; d < cp.moments.expectation.size(); ++d) {
      const auto& e = cp.moments.expectation[d];
      std::cout << "  E[theta" << d + 1 << "] " << e.mean << " [" << e.lower << ", " << e.upper << "]\n";
    }
  }
  return r.aborted ? 3 : 0;
}

int cmd_tv(const std::string& a_path, const std::string& b_path, int points) {
  const PointSet a = read_samples_csv(a_path);
  const PointSet b = read_samples_csv(b_path);
  if (a.rows() != b.rows()) throw ConfigError("tv: sample files have different dimensions");
  if (a.cols() == 0 || b.cols() == 0) throw ConfigError("tv: empty sample file");
  if (points < 2) throw ConfigError("tv: need at least 2 grid points");
  double sum = 0.0;
  for (Eigen::Index d = 0; d < a.rows(); ++d) {
    const double lo = std::min(a.row(d).minCoeff(), b.row(d).minCoeff());
    const double hi = std::max(a.row(d).maxCoeff(), b.row(d).maxCoeff());
    const double pad = 0.25 * std::max(hi - lo, 1e-6);
    const Vector grid = Vector::LinSpaced(points, lo - pad, hi + pad);
    const Vector wa = Vector::Constant(a.cols(), 1.0 / static_cast<double>(a.cols()));
    const Vector wb = Vector::Constant(b.cols(), 1.0 / static_cast<double>(b.cols()));
    const Vector da = weighted_kde_1d(a.row(d).transpose(), wa, grid).density;
    const Vector db = weighted_kde_1d(b.row(d).transpose(), wb, grid).density;
    const double tv = tv_distance(da, db, Vector::Constant(points, grid[1] - grid[0]));
    std::cout << "theta" << d + 1 << " " << tv << "\n";
    sum += tv;
  }
  std::cout << "mean_marginal_tv " << sum / static_cast<double>(a.rows()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-surrogate ABC with batch Bayesian experimental design"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  app.add_option("-c,--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "override a config key, key=value (repeatable)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* threads_opt = app.add_option("--threads", threads, "simulator worker threads")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "one experiment");
  auto* repeat = app.add_subcommand("repeat", "seeded runs with TV aggregation");
  int runs = 10;
  bool keep_runs = false;
  repeat->add_option("--runs", runs, "number of runs")->capture_default_str();
  repeat->add_flag("--keep-runs", keep_runs, "also write each run's directory");
  auto* truth = app.add_subcommand("truth", "ground-truth posterior");
  auto* uq = app.add_subcommand("uq", "posterior ensemble summaries at checkpoints");
  std::vector<int> checkpoints;
  uq->add_option("--checkpoints", checkpoints, "iterations at which to summarise");
  auto* tv = app.add_subcommand("tv", "marginal TV between two sample CSV files");
  std::string tv_a, tv_b;
  int tv_points = 200;
  tv->add_option("a", tv_a, "first samples CSV")->required()->check(CLI::ExistingFile);
  tv->add_option("b", tv_b, "second samples CSV")->required()->check(CLI::ExistingFile);
  tv->add_option("--points", tv_points, "grid points per dimension")->capture_default_str();

  for (auto* sub : {run, repeat, truth, uq, tv}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  if (*out_opt) g.out = out;
  if (*threads_opt) g.threads = threads;

  try {
    if (*run) return cmd_run(g);
    if (*repeat) return cmd_repeat(g, runs, keep_runs);
    if (*truth) return cmd_truth(g);
    if (*uq) return cmd_uq(g, checkpoints);
    if (*tv) return cmd_tv(tv_a, tv_b, tv_points);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
