#include "babc/config.hpp"
#include "babc/error.hpp"
#include "babc/harness.hpp"
#include "babc/output.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace babc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.simulator = "gaussian";
  c.iterations = 3;
  c.map_restarts = 2;
  c.final_chains = 2;
  c.final_chain_length = 1000;
  c.posterior_samples = 500;
  c.tv_grid_resolution = 40;
  c.optimizer.random_points = 200;
  c.optimizer.refine = 2;
  c.backend.grid_resolution = 20;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tv distance of known densities") {
  const Vector g = Vector::LinSpaced(20001, -12.0, 13.0);
  const double dx = g[1] - g[0];
  const Vector w = Vector::Constant(g.size(), dx);
  const Vector a = (-0.5 * g.array().square()).exp().matrix();
  const Vector b = (-0.5 * (g.array() - 1.0).square()).exp().matrix();
  CHECK(tv_distance(a, a, w) == 0.0);
  CHECK(tv_distance(a, b, w) == doctest::Approx(2.0 * oracle::phi_cdf(0.5) - 1.0).epsilon(1e-3));
  Vector c = Vector::Zero(4), d = Vector::Zero(4);
  c[0] = 1.0;
  d[3] = 2.0;
  CHECK(tv_distance(c, d, Vector::Ones(4)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(tv_distance(Vector::Zero(4), d, Vector::Ones(4)), NumericalError);
  CHECK_THROWS_AS(tv_distance(c, Vector::Zero(3), Vector::Ones(4)), DomainError);
}

TEST_CASE("grid ground truth is a normalised density") {
  ExperimentConfig c = small_config();
  c.tv_grid_resolution = 100;
  const GroundTruth t = ground_truth(c);
  CHECK(t.on_grid);
  CHECK(t.grid.values.size() == 10000);
  CHECK(t.grid.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.grid.values.minCoeff() >= 0.0);
}

TEST_CASE("config JSON round trip, overrides and validation") {
  ExperimentConfig c = small_config();
  c.acquisition = AcquisitionKind::EIMAD;
  c.batch_size = 3;
  c.uq_checkpoints = {0, 2};
  c.prior_lower = Vector::Constant(2, -1.0);
  c.prior_upper = Vector::Constant(2, 1.0);
  const std::string text = config_to_json_text(c);
  const ExperimentConfig d = config_from_json_text(text);
  CHECK(config_to_json_text(d) == text);
  apply_override(c, "batch_size=5");
  CHECK(c.batch_size == 5);
  apply_override(c, "acquisition=MAXV");
  CHECK(c.acquisition == AcquisitionKind::MAXV);
  CHECK_THROWS_AS(apply_override(c, "no_such_key=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "batch_size"), ConfigError);
  CHECK_THROWS_AS(config_from_json_text("{\"batch_size\": 0}").validate(2), ConfigError);
  CHECK_THROWS_AS(config_from_json_text("{\"initial_size\": 3}").validate(2), ConfigError);
  CHECK_THROWS_AS(config_from_json_text("{\"acquisition\": \"XYZ\"}"), ConfigError);
  CHECK_THROWS_AS(config_from_json_text("not json"), ConfigError);
  CHECK(ExperimentConfig{}.resolved_initial_size(2) == 10);
  CHECK(ExperimentConfig{}.resolved_initial_size(4) == 20);
}

TEST_CASE("a run grows the dataset by b per iteration and is reproducible") {
  ExperimentConfig c = small_config();
  c.batch_size = 2;
  const GroundTruth t = ground_truth(c);
  const RunRecord a = run_inference(c, &t);
  REQUIRE_FALSE(a.aborted);
  CHECK(a.data.size() == 10 + 3 * 2);
  for (const auto& it : a.iterations) {
    CHECK(it.dataset_size == 10 + it.iteration * 2);
    CHECK(it.batch.cols() == 2);
    CHECK(std::isfinite(it.tv));
  }
  CHECK(std::isfinite(a.initial_tv));
  CHECK(a.final_tv == a.iterations.back().tv);
  CHECK(a.posterior_samples.cols() == 500);
  const RunRecord b = run_inference(c, &t);
  CHECK(a.data.points == b.data.points);
  CHECK(a.data.values == b.data.values);
  CHECK(a.posterior_samples == b.posterior_samples);

  const auto dir = std::filesystem::temp_directory_path() / "babc_test_run";
  std::filesystem::remove_all(dir);
  write_run(a, (dir / "a").string());
  write_run(b, (dir / "b").string());
  for (const char* f : {"manifest.json", "dataset.csv", "tv_trace.csv", "batch_log.csv", "posterior_samples.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const PointSet back = read_samples_csv((dir / "a" / "posterior_samples.csv").string());
  CHECK((back - a.posterior_samples).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero iterations keep only the initial design") {
  ExperimentConfig c = small_config();
  c.iterations = 0;
  const RunRecord r = run_inference(c, nullptr);
  CHECK(r.iterations.empty());
  CHECK(r.data.size() == 10);
  CHECK(r.posterior_samples.cols() > 0);
}

TEST_CASE("sequential and batch runs with equal budget end with equal datasets sizes") {
  ExperimentConfig c = small_config();
  c.iterations = 4;
  c.tv_every = -1;
  const RunRecord seq = run_inference(c, nullptr);
  c.iterations = 2;
  c.batch_size = 2;
  const RunRecord bat = run_inference(c, nullptr);
  CHECK(seq.data.size() == bat.data.size());
}

TEST_CASE("repeat with identical seeds gives zero-width bands") {
  ExperimentConfig c = small_config();
  c.iterations = 2;
  const GroundTruth t = ground_truth(c);
  const RepeatSummary s = repeat_experiment(c, 3, t, {4, 4, 4});
  CHECK(s.runs.size() == 3);
  CHECK(s.aborted == 0);
  CHECK(s.median.size() == 2);
  CHECK((s.q95 - s.q05).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(repeat_experiment(c, 2, t), ConfigError);
}

TEST_CASE("a failing simulator is retried once and then aborts the run") {
  Simulator s = make_simulator("gaussian");
  int calls = 0;
  s.discrepancy = [&](const Vector&, Rng&) -> double {
    ++calls;
    if (calls == 1) throw std::runtime_error("transient");
    return 1.0;
  };
  PointSet x = Matrix::Zero(2, 3);
  const Vector d = simulate_batch(s, x, 1, 0, 1);
  CHECK(d.isApproxToConstant(1.0));
  CHECK(calls == 4);
  s.discrepancy = [](const Vector&, Rng&) -> double { return std::nan(""); };
  CHECK_THROWS_AS(simulate_batch(s, x, 1, 0, 1), SimulationError);
}

TEST_CASE("simulations do not depend on the number of worker threads") {
  const Simulator s = make_simulator("banana");
  Rng rng(1);
  const PointSet x = s.bounds.sample(rng, 9);
  CHECK(simulate_batch(s, x, 3, 5, 1) == simulate_batch(s, x, 3, 5, 4));
}

TEST_CASE("marginal TV between sample sets and a sample truth") {
  ExperimentConfig c = small_config();
  Rng rng(2);
  GroundTruth t;
  t.dim = 2;
  std::normal_distribution<double> z(0.0, 1.0);
  t.samples.resize(2, 4000);
  for (Eigen::Index j = 0; j < 4000; ++j) t.samples.col(j) << z(rng), 2.0 * z(rng);
  const Vector w = Vector::Constant(4000, 1.0 / 4000);
  for (int d = 0; d < 2; ++d) {
    t.marginal_grids.push_back(Vector::LinSpaced(200, -10.0, 10.0));
    t.marginal_density.push_back(weighted_kde_1d(t.samples.row(d).transpose(), w, t.marginal_grids[d]).density);
  }
  CHECK(tv_marginals(t.samples, w, t) == doctest::Approx(0.0).epsilon(1e-12));
  const PointSet shifted = t.samples.array() + 5.0;
  CHECK(tv_marginals(shifted, w, t) > 0.8);
  const PointSet outside = t.samples.array() + 50.0;
  CHECK_THROWS_AS(tv_marginals(outside, w, t), NumericalError);
}
