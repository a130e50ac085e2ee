#include "babc/uq.hpp"

#include "babc/abcmodel.hpp"
#include "babc/error.hpp"
#include "babc/specfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace babc {

void UqConfig::validate() const {
  if (sample_paths < 2) throw DomainError("UqConfig: sample_paths must be >= 2");
  if (grid_resolution < 2) throw DomainError("UqConfig: grid_resolution must be >= 2");
  if (is_thinned < 1) throw DomainError("UqConfig: is_thinned must be >= 1");
  if (is_thinned > static_cast<long>(mcmc_chains) * (mcmc_length / 2)) {
    throw DomainError("UqConfig: thinned count exceeds the retained MCMC sample count");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("UqConfig: alpha must lie in (0, 1)");
}

double empirical_quantile(Vector values, double q) {
  if (values.size() == 0) throw DomainError("empirical_quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Matrix path_weights(const Matrix& paths, const Vector& log_base, double epsilon, double noise_sd, Vector* ess) {
  const Eigen::Index s = paths.rows();
  const Eigen::Index n = paths.cols();
  Matrix w(s, n);
  if (ess) ess->resize(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      double lw = -std::numeric_limits<double>::infinity();
      if (std::isfinite(log_base[j])) lw = log_base[j] + specfn::log_norm_cdf((epsilon - paths(i, j)) / noise_sd);
      w(i, j) = lw;
      mx = std::max(mx, lw);
    }
    if (!std::isfinite(mx)) throw DegenerateWeightsError("path_weights: every weight of a path is zero");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      w(i, j) = std::isfinite(w(i, j)) ? std::exp(w(i, j) - mx) : 0.0;
      sum += w(i, j);
    }
    w.row(i) /= sum;
    if (ess) (*ess)[i] = effective_sample_size(w.row(i).transpose());
  }
  return w;
}

PosteriorEnsemble quantify_grid(const GpPosterior& post, double epsilon, double noise_sd, const UniformPrior& prior,
                                const UqConfig& config, Rng& rng) {
  config.validate();
  if (prior.box.dim() > 2) throw DomainError("quantify_grid: only for p <= 2");
  if (!(noise_sd > 0.0)) throw DomainError("quantify_grid: noise sd must be > 0");
  const GridEvaluation g = grid_points(prior.box, config.grid_resolution);
  PosteriorEnsemble ens;
  ens.backend = "grid";
  ens.points = g.points;
  ens.thinned_count = static_cast<int>(g.points.cols());
  Vector log_base(g.points.cols());
  for (Eigen::Index j = 0; j < g.points.cols(); ++j) {
    log_base[j] = prior.log_density(g.points.col(j)) + std::log(g.weights[j]);
  }
  Matrix paths = post.sample_paths(g.points, config.sample_paths, rng);
  ens.weights = path_weights(paths, log_base, epsilon, noise_sd, &ens.ess);
  if (config.keep_paths) ens.paths = std::move(paths);
  return ens;
}

PosteriorEnsemble quantify_is(const GpPosterior& post, double epsilon, double noise_sd, const UniformPrior& prior,
                              const UqConfig& config, Rng& rng) {
  config.validate();
  if (!(noise_sd > 0.0)) throw DomainError("quantify_is: noise sd must be > 0");
  const double alpha = config.alpha;
  auto log_q = [&](const PointSet& x) {
    const QueryFeatures f = post.features(x);
    const BeliefField bf = BeliefField::from_features(f, epsilon, noise_sd, prior);
    Vector out(bf.size());
    for (int j = 0; j < bf.size(); ++j) out[j] = log_unnorm_quantile(bf.at(j), alpha);
    return out;
  };
  const Vector at_data = log_q(post.data().points);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < at_data.size(); ++j) {
    if (at_data[j] > at_data[best]) best = j;
  }
  if (!std::isfinite(at_data[best])) throw NumericalError("quantify_is: instrumental vanishes at every data point");

  McmcConfig mc;
  mc.chain_count = config.mcmc_chains;
  mc.chain_length = config.mcmc_length;
  mc.adaptation_start = std::min(1000, config.mcmc_length / 5);
  mc.bounds = prior.box;
  mc.start = post.data().points.col(best);
  const McmcResult chains = adaptive_metropolis(BatchLogDensity(log_q), mc, rng);

  PosteriorEnsemble ens;
  ens.backend = "is";
  if (chains.low_acceptance) ens.warnings.emplace_back("instrumental MCMC acceptance below 1%");
  Eigen::Index target = std::min<Eigen::Index>(config.is_thinned, chains.samples.cols());
  while (true) {
    const auto idx = thin_indices(chains.samples.cols(), target);
    PointSet pts(prior.box.dim(), target);
    Vector log_base(target);
    for (Eigen::Index k = 0; k < target; ++k) {
      pts.col(k) = chains.samples.col(idx[k]);
      log_base[k] = prior.log_density(pts.col(k)) - chains.log_density[idx[k]];
    }
    try {
      Matrix paths = post.sample_paths(pts, config.sample_paths, rng);
      ens.points = pts;
      ens.thinned_count = static_cast<int>(target);
      ens.weights = path_weights(paths, log_base, epsilon, noise_sd, &ens.ess);
      if (config.keep_paths) ens.paths = std::move(paths);
      break;
    } catch (const IllConditionedError&) {
      if (target < 200) throw;
      target /= 2;
      ens.warnings.emplace_back("joint path covariance ill-conditioned; thinned count halved to " +
                                std::to_string(target));
    }
  }
  const double med_ess = empirical_quantile(ens.ess, 0.5);
  if (med_ess < 50.0) {
    ens.degenerate = true;
    ens.warnings.emplace_back("median per-path ESS below 50");
  }
  return ens;
}

namespace {

Interval summarise(const Vector& v) {
  Interval out;
  out.mean = v.mean();
  out.lower = empirical_quantile(v, 0.025);
  out.upper = empirical_quantile(v, 0.975);
  return out;
}

}  // namespace

MomentSummary ensemble_moments(const PosteriorEnsemble& ens) {
  const Eigen::Index p = ens.points.rows();
  MomentSummary out;
  out.path_expectations = ens.weights * ens.points.transpose();  // s x p
  for (Eigen::Index d = 0; d < p; ++d) {
    const Vector e = out.path_expectations.col(d);
    Vector var(ens.weights.rows());
    for (Eigen::Index i = 0; i < ens.weights.rows(); ++i) {
      const Eigen::ArrayXd dev = ens.points.row(d).transpose().array() - e[i];
      var[i] = ens.weights.row(i).dot((dev * dev).matrix().transpose());
    }
    out.expectation.push_back(summarise(e));
    out.variance.push_back(summarise(var));
  }
  return out;
}

MarginalBands ensemble_marginals(const PosteriorEnsemble& ens, int dim, const Vector& eval_grid) {
  if (dim < 0 || dim >= ens.points.rows()) throw DomainError("ensemble_marginals: dimension out of range");
  // Merge points sharing a coordinate value (grid backends) before smoothing.
  const Vector coord = ens.points.row(dim).transpose();
  std::vector<Eigen::Index> order(coord.size());
  for (Eigen::Index j = 0; j < coord.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return coord[a] < coord[b]; });
  std::vector<double> uniq;
  std::vector<Eigen::Index> group(coord.size());
  for (Eigen::Index k = 0; k < coord.size(); ++k) {
    const double v = coord[order[k]];
    if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
    group[order[k]] = static_cast<Eigen::Index>(uniq.size()) - 1;
  }
  const Vector pts = Eigen::Map<const Vector>(uniq.data(), static_cast<Eigen::Index>(uniq.size()));

  MarginalBands out;
  out.grid = eval_grid;
  const Eigen::Index s = ens.weights.rows();
  out.curves.resize(s, eval_grid.size());
  for (Eigen::Index i = 0; i < s; ++i) {
    Vector w = Vector::Zero(pts.size());
    for (Eigen::Index j = 0; j < coord.size(); ++j) w[group[j]] += ens.weights(i, j);
    const KdeResult k = weighted_kde_1d(pts, w, eval_grid);
    out.point_mass = out.point_mass || k.point_mass;
    out.curves.row(i) = k.density.transpose();
  }
  out.median.resize(eval_grid.size());
  out.lower.resize(eval_grid.size());
  out.upper.resize(eval_grid.size());
  for (Eigen::Index g = 0; g < eval_grid.size(); ++g) {
    const Vector col = out.curves.col(g);
    out.median[g] = empirical_quantile(col, 0.5);
    out.lower[g] = empirical_quantile(col, 0.025);
    out.upper[g] = empirical_quantile(col, 0.975);
  }
  return out;
}

}  // namespace babc
