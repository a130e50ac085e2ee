#include "babc/harness.hpp"

#include "babc/abcmodel.hpp"
#include "babc/error.hpp"
#include "babc/output.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

namespace babc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector uniform_grid(double lo, double hi, int n) { return Vector::LinSpaced(n, lo, hi); }

}  // namespace

Simulator resolve_simulator(const ExperimentConfig& config) {
  Simulator sim = make_simulator(config.simulator);
  if (config.prior_lower && config.prior_upper) {
    if (config.prior_lower->size() != sim.dim()) throw ConfigError("prior bounds do not match the simulator");
    sim.bounds = Box(*config.prior_lower, *config.prior_upper);
  }
  if (config.epsilon) sim.epsilon = *config.epsilon;
  return sim;
}

Vector grid_density(const GridEvaluation& grid, const std::function<Vector(const PointSet&)>& unnorm) {
  Vector v = unnorm(grid.points).cwiseProduct(grid.weights);
  const double s = v.sum();
  if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("grid_density: density cannot be normalised");
  return v / s;
}

double tv_distance(const Vector& a, const Vector& b, const Vector& cell_weights) {
  if (a.size() != b.size() || a.size() != cell_weights.size()) throw DomainError("tv_distance: size mismatch");
  const double za = a.dot(cell_weights);
  const double zb = b.dot(cell_weights);
  if (!(za > 0.0) || !(zb > 0.0) || !std::isfinite(za) || !std::isfinite(zb)) {
    throw NumericalError("tv_distance: density cannot be normalised");
  }
  const Vector diff = (a / za - b / zb).cwiseAbs();
  return std::clamp(0.5 * diff.dot(cell_weights), 0.0, 1.0);
}

double tv_marginals(const PointSet& samples, const Vector& weights, const GroundTruth& truth) {
  if (samples.rows() != truth.dim || truth.marginal_grids.size() != static_cast<std::size_t>(truth.dim)) {
    throw DomainError("tv_marginals: truth marginals missing or dimension mismatch");
  }
  double sum = 0.0;
  for (int d = 0; d < truth.dim; ++d) {
    const Vector& g = truth.marginal_grids[d];
    const KdeResult k = weighted_kde_1d(samples.row(d).transpose(), weights, g);
    const double dx = (g[g.size() - 1] - g[0]) / static_cast<double>(g.size() - 1);
    sum += tv_distance(k.density, truth.marginal_density[d], Vector::Constant(g.size(), dx));
  }
  return sum / truth.dim;
}

// ---------------------------------------------------------------------------

GroundTruth ground_truth(const ExperimentConfig& config) {
  const Simulator sim = resolve_simulator(config);
  GroundTruth gt;
  gt.dim = sim.dim();
  const UniformPrior prior = sim.prior();
  if (sim.has_known_f() && sim.dim() <= 2) {
    gt.on_grid = true;
    gt.grid = grid_points(sim.bounds, config.tv_grid_resolution);
    gt.grid.values = grid_density(gt.grid, [&](const PointSet& x) {
      Vector v(x.cols());
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        v[j] = true_unnorm_density(sim.mean_fn(x.col(j)), sim.epsilon, sim.noise_sd, prior.density(x.col(j)));
      }
      return v;
    });
  } else {
    // ABC-MCMC: pseudo-marginal Metropolis with the indicator Delta <= epsilon.
    Rng sim_rng = substream(config.seed, "truth-simulator");
    Rng mc_rng = substream(config.seed, "truth-mcmc");
    auto accepts = [&](const Vector& th) { return sim.discrepancy(th, sim_rng) <= sim.epsilon; };
    int tries = 0;
    while (!accepts(sim.theta_true)) {
      if (++tries >= 1000) throw NumericalError("ground_truth: no accepted simulation at the reference parameter");
    }
    auto log_density = [&](const PointSet& x) {
      Vector out(x.cols());
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const Vector th = x.col(j);
        out[j] = (sim.bounds.contains(th) && accepts(th)) ? 0.0 : -std::numeric_limits<double>::infinity();
      }
      return out;
    };
    McmcConfig mc;
    mc.chain_count = config.truth_chains;
    mc.chain_length = config.truth_length;
    mc.adaptation_start = config.truth_length / 10;
    mc.initial_scale = 0.02;
    mc.bounds = sim.bounds;
    mc.start = sim.theta_true;
    mc.start_log_density = 0.0;
    const McmcResult res = adaptive_metropolis(BatchLogDensity(log_density), mc, mc_rng);
    gt.acceptance_rate = res.acceptance_rate;
    if (res.acceptance_rate < 1e-3) gt.warnings.emplace_back("ABC-MCMC acceptance below 0.1%; consider a larger epsilon");
    gt.samples = thin(res.samples, std::min<Eigen::Index>(config.truth_samples, res.samples.cols()));
  }
  if (!gt.on_grid) {
    const Vector w = Vector::Constant(gt.samples.cols(), 1.0 / static_cast<double>(gt.samples.cols()));
    for (int d = 0; d < gt.dim; ++d) {
      gt.marginal_grids.push_back(uniform_grid(sim.bounds.lower[d], sim.bounds.upper[d], config.tv_marginal_points));
      gt.marginal_density.push_back(weighted_kde_1d(gt.samples.row(d).transpose(), w, gt.marginal_grids[d]).density);
    }
  }
  return gt;
}

GroundTruth ground_truth_cached(const ExperimentConfig& config) {
  if (config.truth_cache.empty()) return ground_truth(config);
  const Simulator sim = resolve_simulator(config);
  if (sim.has_known_f() && sim.dim() <= 2) return ground_truth(config);
  if (std::filesystem::exists(config.truth_cache)) {
    GroundTruth gt;
    gt.dim = sim.dim();
    gt.samples = read_samples_csv(config.truth_cache);
    if (gt.samples.rows() != gt.dim) throw ConfigError("truth cache dimension does not match the simulator");
    const Vector w = Vector::Constant(gt.samples.cols(), 1.0 / static_cast<double>(gt.samples.cols()));
    for (int d = 0; d < gt.dim; ++d) {
      gt.marginal_grids.push_back(uniform_grid(sim.bounds.lower[d], sim.bounds.upper[d], config.tv_marginal_points));
      gt.marginal_density.push_back(weighted_kde_1d(gt.samples.row(d).transpose(), w, gt.marginal_grids[d]).density);
    }
    return gt;
  }
  GroundTruth gt = ground_truth(config);
  const auto parent = std::filesystem::path(config.truth_cache).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_samples_csv(config.truth_cache, gt.samples);
  return gt;
}

// ---------------------------------------------------------------------------

Vector simulate_batch(const Simulator& sim, const PointSet& points, std::uint64_t seed, int first_index, int threads) {
  const Eigen::Index n = points.cols();
  Vector out = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(n);
  auto one = [&](Eigen::Index j) {
    const auto k = static_cast<std::uint64_t>(first_index + j);
    for (int attempt = 0; attempt < 2; ++attempt) {
      Rng rng = substream(seed, attempt == 0 ? "simulator" : "simulator-retry", k);
      try {
        const double d = sim.discrepancy(points.col(j), rng);
        if (std::isfinite(d)) {
          out[j] = d;
          return;
        }
        errors[j] = "non-finite discrepancy";
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  if (threads <= 1 || n <= 1) {
    for (Eigen::Index j = 0; j < n; ++j) one(j);
  } else {
    std::mutex mu;
    Eigen::Index next = 0;
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<Eigen::Index>(threads, n));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          Eigen::Index j;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= n) return;
            j = next++;
          }
          one(j);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!errors[j].empty() && !std::isfinite(out[j])) {
      throw SimulationError("simulation " + std::to_string(first_index + j) + " failed twice: " + errors[j]);
    }
  }
  return out;
}

McmcResult sample_estimate(const GpPosterior& post, const Simulator& sim, Estimator estimator, int chains,
                           int length, Rng& rng) {
  const UniformPrior prior = sim.prior();
  const double noise_sd = post.hyper().noise_sd();
  auto log_density = [&](const PointSet& x) {
    const QueryFeatures f = post.features(x);
    return BeliefField::from_features(f, sim.epsilon, noise_sd, prior).log_estimate(estimator);
  };
  const Vector at_data = log_density(post.data().points);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < at_data.size(); ++j) {
    if (at_data[j] > at_data[best]) best = j;
  }
  if (!std::isfinite(at_data[best])) throw NumericalError("sample_estimate: estimate vanishes at every data point");
  McmcConfig mc;
  mc.chain_count = chains;
  mc.chain_length = length;
  mc.adaptation_start = length / 10;
  mc.bounds = sim.bounds;
  mc.start = post.data().points.col(best);
  mc.start_log_density = at_data[best];
  return adaptive_metropolis(BatchLogDensity(log_density), mc, rng);
}

namespace {

struct TvContext {
  const GroundTruth* truth = nullptr;
  const Simulator* sim = nullptr;
  const ExperimentConfig* config = nullptr;
};

double tv_of(const GpPosterior& post, AcquisitionKind kind, const TvContext& ctx, Rng& rng,
             PointSet* samples_out = nullptr, double* acceptance = nullptr) {
  const Estimator est = estimator_for(kind);
  const UniformPrior prior = ctx.sim->prior();
  if (ctx.truth->on_grid) {
    const Vector p = grid_density(ctx.truth->grid, [&](const PointSet& x) {
      const QueryFeatures f = post.features(x);
      return BeliefField::from_features(f, ctx.sim->epsilon, post.hyper().noise_sd(), prior).estimate(est);
    });
    return tv_distance(p, ctx.truth->grid.values, Vector::Ones(p.size()));
  }
  const McmcResult mc =
      sample_estimate(post, *ctx.sim, est, ctx.config->final_chains, ctx.config->final_chain_length, rng);
  const PointSet s = thin(mc.samples, std::min<Eigen::Index>(ctx.config->posterior_samples, mc.samples.cols()));
  if (samples_out) *samples_out = s;
  if (acceptance) *acceptance = mc.acceptance_rate;
  return tv_marginals(s, Vector::Constant(s.cols(), 1.0 / static_cast<double>(s.cols())), *ctx.truth);
}

UqCheckpoint uq_checkpoint(const GpPosterior& post, const Simulator& sim, const ExperimentConfig& cfg, int it) {
  Rng rng = substream(cfg.seed, "uq", static_cast<std::uint64_t>(it));
  const UniformPrior prior = sim.prior();
  const PosteriorEnsemble ens = sim.dim() <= 2
                                    ? quantify_grid(post, sim.epsilon, post.hyper().noise_sd(), prior, cfg.uq, rng)
                                    : quantify_is(post, sim.epsilon, post.hyper().noise_sd(), prior, cfg.uq, rng);
  UqCheckpoint cp;
  cp.iteration = it;
  cp.backend = ens.backend;
  cp.moments = ensemble_moments(ens);
  cp.median_ess = empirical_quantile(ens.ess, 0.5);
  cp.warnings = ens.warnings;
  return cp;
}

}  // namespace

RunRecord run_inference(const ExperimentConfig& config, const GroundTruth* truth) {
  const auto t_start = Clock::now();
  const Simulator sim = resolve_simulator(config);
  const int p = sim.dim();
  config.validate(p);
  const UniformPrior prior = sim.prior();
  const int b0 = config.resolved_initial_size(p);
  const std::uint64_t seed = config.seed;
  const AcquisitionKind kind = config.acquisition;

  RunRecord rec;
  rec.config = config;
  rec.simulator = sim.name;
  rec.epsilon = sim.epsilon;
  rec.initial_size = b0;

  Rng init_rng = substream(seed, "init");
  const PointSet x0 = sim.bounds.sample(init_rng, b0);
  Vector d0;
  try {
    d0 = simulate_batch(sim, x0, seed, 0, config.threads);
  } catch (const SimulationError& e) {
    rec.aborted = true;
    rec.abort_reason = e.what();
    rec.data = DiscrepancyDataset(PointSet(p, 0), Vector(0), sim.bounds);
    return rec;
  }
  rec.data = DiscrepancyDataset(x0, d0, sim.bounds);
  const BasisSpec basis = BasisSpec::quadratic(p);

  auto fit_map = [&](int it, const GpHyper* prev, bool& improved) {
    const HyperPriors priors = HyperPriors::defaults_for(rec.data);
    Rng r = substream(seed, "optimizer-map", static_cast<std::uint64_t>(it));
    MapOptions o;
    const bool full = prev == nullptr || it % config.map_every == 0;
    o.restarts = full ? config.map_restarts : 1;
    o.max_iterations = full ? config.map_max_iterations : config.map_warm_iterations;
    const MapResult res = map_hyperparameters(rec.data, basis, priors, prev ? *prev : priors.mode(), r, o);
    improved = res.improved;
    if (!res.improved && full) rec.warnings.push_back("MAP did not improve on its start at iteration " + std::to_string(it));
    return res.hyper;
  };

  bool improved = false;
  GpHyper hyper = fit_map(0, nullptr, improved);
  rec.initial_hyper = hyper;
  GpPosterior post = GpPosterior::fit(rec.data, hyper, basis);

  TvContext tctx{truth, &sim, &config};
  const bool track_tv = truth != nullptr && config.tv_every >= 0;
  if (track_tv) {
    Rng r = substream(seed, "mcmc-tv", 0);
    rec.initial_tv = tv_of(post, kind, tctx, r);
  }
  auto wants_uq = [&](int it) {
    return std::find(config.uq_checkpoints.begin(), config.uq_checkpoints.end(), it) != config.uq_checkpoints.end();
  };
  if (wants_uq(0)) rec.uq.push_back(uq_checkpoint(post, sim, config, 0));

  for (int it = 1; it <= config.iterations; ++it) {
    const auto t_it = Clock::now();
    Rng opt_rng = substream(seed, "optimizer", static_cast<std::uint64_t>(it));
    AcquisitionContext ctx;
    ctx.post = &post;
    ctx.epsilon = sim.epsilon;
    ctx.prior = prior;
    ctx.lcb_beta = config.lcb_beta;
    ctx.optimizer = config.optimizer;
    CandidateBatch batch;
    if (is_expected_loss(kind)) {
      Rng mc_rng = substream(seed, "mcmc", static_cast<std::uint64_t>(it));
      const ExpectedLoss loss(post, kind, sim.epsilon, prior,
                              prepare_backend(post, kind, sim.epsilon, prior, config.backend, mc_rng));
      if (loss.backend().degenerate) rec.warnings.push_back("degenerate backend at iteration " + std::to_string(it));
      ctx.loss = &loss;
      batch = greedy_batch(kind, ctx, config.batch_size, opt_rng);
    } else {
      batch = greedy_batch(kind, ctx, config.batch_size, opt_rng);
    }
    batch.iteration = it;

    Vector deltas;
    try {
      deltas = simulate_batch(sim, batch.points, seed, rec.data.size(), config.threads);
    } catch (const SimulationError& e) {
      rec.aborted = true;
      rec.abort_reason = e.what();
      break;
    }
    rec.data.append(batch.points, deltas);
    hyper = fit_map(it, &hyper, improved);
    post = GpPosterior::fit(rec.data, hyper, basis);

    IterationRecord ir;
    ir.iteration = it;
    ir.dataset_size = rec.data.size();
    ir.batch = batch.points;
    ir.acq_values = batch.values;
    ir.hyper = hyper;
    ir.map_improved = improved;
    ir.clipped = batch.clipped;
    if (track_tv && config.tv_every > 0 && (it % config.tv_every == 0)) {
      Rng r = substream(seed, "mcmc-tv", static_cast<std::uint64_t>(it));
      ir.tv = tv_of(post, kind, tctx, r);
    }
    if (wants_uq(it)) rec.uq.push_back(uq_checkpoint(post, sim, config, it));
    ir.seconds = seconds_since(t_it);
    rec.iterations.push_back(std::move(ir));
  }

  rec.final_hyper = hyper;
  Rng final_rng = substream(seed, "mcmc-final");
  const McmcResult mc =
      sample_estimate(post, sim, estimator_for(kind), config.final_chains, config.final_chain_length, final_rng);
  rec.posterior_acceptance = mc.acceptance_rate;
  if (mc.low_acceptance) rec.warnings.emplace_back("final posterior MCMC acceptance below 1%");
  rec.posterior_samples = thin(mc.samples, std::min<Eigen::Index>(config.posterior_samples, mc.samples.cols()));

  if (track_tv) {
    if (truth->on_grid) {
      if (!rec.iterations.empty() && std::isfinite(rec.iterations.back().tv)) {
        rec.final_tv = rec.iterations.back().tv;
      } else {
        Rng r = substream(seed, "mcmc-tv", static_cast<std::uint64_t>(config.iterations));
        rec.final_tv = rec.iterations.empty() ? rec.initial_tv : tv_of(post, kind, tctx, r);
      }
    } else {
      const Vector w = Vector::Constant(rec.posterior_samples.cols(), 1.0 / rec.posterior_samples.cols());
      rec.final_tv = tv_marginals(rec.posterior_samples, w, *truth);
    }
    if (!rec.iterations.empty() && !std::isfinite(rec.iterations.back().tv)) rec.iterations.back().tv = rec.final_tv;
  }
  rec.seconds = seconds_since(t_start);
  return rec;
}

RepeatSummary repeat_experiment(const ExperimentConfig& config, int runs, const GroundTruth& truth,
                                const std::vector<std::uint64_t>& seeds) {
  if (runs < 3) throw ConfigError("repeat_experiment: runs must be >= 3");
  if (!seeds.empty() && static_cast<int>(seeds.size()) != runs) throw ConfigError("repeat_experiment: seed count");
  RepeatSummary out;
  std::vector<double> finals, initials;
  for (int r = 0; r < runs; ++r) {
    ExperimentConfig c = config;
    c.seed = seeds.empty() ? config.seed + static_cast<std::uint64_t>(r) : seeds[r];
    try {
      RunRecord rec = run_inference(c, &truth);
      if (rec.aborted) {
        ++out.aborted;
        continue;
      }
      finals.push_back(rec.final_tv);
      initials.push_back(rec.initial_tv);
      out.runs.push_back(std::move(rec));
    } catch (const Error&) {
      ++out.aborted;
    }
  }
  const int t = config.iterations;
  out.median = Vector::Constant(t, std::numeric_limits<double>::quiet_NaN());
  out.q05 = out.median;
  out.q95 = out.median;
  for (int i = 1; i <= t; ++i) {
    out.iterations.push_back(i);
    std::vector<double> v;
    for (const auto& rec : out.runs) {
      if (static_cast<int>(rec.iterations.size()) >= i && std::isfinite(rec.iterations[i - 1].tv)) {
        v.push_back(rec.iterations[i - 1].tv);
      }
    }
    if (v.empty()) continue;
    const Vector vv = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    out.median[i - 1] = empirical_quantile(vv, 0.5);
    out.q05[i - 1] = empirical_quantile(vv, 0.05);
    out.q95[i - 1] = empirical_quantile(vv, 0.95);
  }
  out.final_tvs = Eigen::Map<const Vector>(finals.data(), static_cast<Eigen::Index>(finals.size()));
  out.initial_tvs = Eigen::Map<const Vector>(initials.data(), static_cast<Eigen::Index>(initials.size()));
  if (!finals.empty()) out.final_median = empirical_quantile(out.final_tvs, 0.5);
  if (!initials.empty()) out.initial_median = empirical_quantile(out.initial_tvs, 0.5);
  return out;
}

}  // namespace babc
