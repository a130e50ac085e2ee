#include "babc/sampling.hpp"

#include "babc/error.hpp"

#include <cmath>
#include <limits>

namespace babc {

void McmcConfig::validate() const {
  if (chain_count < 1) throw DomainError("McmcConfig: chain_count must be >= 1");
  if (!(burn_in > 0.0 && burn_in < 1.0)) throw DomainError("McmcConfig: burn_in must lie in (0, 1)");
  if (adaptation_start < 0 || chain_length <= 2 * adaptation_start) {
    throw DomainError("McmcConfig: chain_length must exceed twice adaptation_start");
  }
  if (!(initial_scale > 0.0)) throw DomainError("McmcConfig: initial_scale must be > 0");
  if (start.size() != bounds.dim()) throw DomainError("McmcConfig: start/bounds dimension mismatch");
}

namespace {

struct ChainState {
  Rng rng;
  Vector x;
  double logp = 0.0;
  Vector mean;   // running mean of visited states
  Matrix m2;     // running sum of outer deviations
  long count = 0;
  Matrix chol;   // current proposal Cholesky factor
  long accepted_after_burn = 0;

  void record(const Vector& v) {
    ++count;
    const Vector d = v - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (v - mean).transpose();
  }
};

}  // namespace

McmcResult adaptive_metropolis(const BatchLogDensity& log_density, const McmcConfig& config, Rng& rng) {
  config.validate();
  const int p = config.bounds.dim();
  const int c = config.chain_count;
  const int n = config.chain_length;
  const int burn = static_cast<int>(std::floor(config.burn_in * n));
  const int kept = n - burn;
  const double sd = 2.38 * 2.38 / p;
  const Vector width = config.bounds.width();

  const double start_logp =
      std::isnan(config.start_log_density) ? log_density(config.start)[0] : config.start_log_density;
  if (!std::isfinite(start_logp)) throw DomainError("adaptive_metropolis: log density not finite at the start point");

  const std::uint64_t base = draw_seed(rng);
  std::vector<ChainState> chains(c);
  const Matrix init_chol = (config.initial_scale * width).asDiagonal();
  for (int k = 0; k < c; ++k) {
    chains[k].rng = substream(base, "chain", static_cast<std::uint64_t>(k));
    chains[k].x = config.start;
    chains[k].logp = start_logp;
    chains[k].mean = Vector::Zero(p);
    chains[k].m2 = Matrix::Zero(p, p);
    chains[k].chol = init_chol;
  }

  McmcResult res;
  res.samples.resize(p, static_cast<Eigen::Index>(kept) * c);
  res.log_density.resize(static_cast<Eigen::Index>(kept) * c);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PointSet proposals(p, c);
  std::vector<bool> inside(c);
  const Matrix reg = 1e-6 * Matrix::Identity(p, p);

  for (int step = 0; step < n; ++step) {
    for (int k = 0; k < c; ++k) {
      ChainState& ch = chains[k];
      if (step >= config.adaptation_start && ch.count > p + 1) {
        const Matrix cov = sd * (ch.m2 / static_cast<double>(ch.count - 1) + reg);
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) ch.chol = llt.matrixL();
      }
      Vector z(p);
      for (int i = 0; i < p; ++i) z[i] = normal(ch.rng);
      proposals.col(k) = ch.x + ch.chol * z;
      inside[k] = config.bounds.contains(proposals.col(k));
    }
    const Vector lp = log_density(proposals);
    for (int k = 0; k < c; ++k) {
      ChainState& ch = chains[k];
      const double u = unif(ch.rng);
      const double cand = inside[k] ? lp[k] : -std::numeric_limits<double>::infinity();
      if (std::isfinite(cand) && std::log(u) < cand - ch.logp) {
        ch.x = proposals.col(k);
        ch.logp = cand;
        if (step >= burn) ++ch.accepted_after_burn;
      }
      ch.record(ch.x);
      if (step >= burn) {
        const Eigen::Index idx = static_cast<Eigen::Index>(k) * kept + (step - burn);
        res.samples.col(idx) = ch.x;
        res.log_density[idx] = ch.logp;
      }
    }
  }
  long acc = 0;
  for (const auto& ch : chains) acc += ch.accepted_after_burn;
  res.acceptance_rate = static_cast<double>(acc) / (static_cast<double>(kept) * c);
  res.low_acceptance = res.acceptance_rate < 0.01;
  return res;
}

McmcResult adaptive_metropolis(const LogDensity& log_density, const McmcConfig& config, Rng& rng) {
  auto batch = [&](const PointSet& x) {
    Vector out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[j] = log_density(x.col(j));
    return out;
  };
  return adaptive_metropolis(BatchLogDensity(batch), config, rng);
}

GridEvaluation grid_points(const Box& bounds, int resolution) {
  const int p = bounds.dim();
  if (p < 1 || p > 2) throw DomainError("grid_points: only 1 or 2 dimensions are supported");
  if (resolution < 1) throw DomainError("grid_points: resolution must be >= 1");
  const Vector h = bounds.width() / static_cast<double>(resolution);
  GridEvaluation g;
  g.resolution = resolution;
  const Eigen::Index n = p == 1 ? resolution : static_cast<Eigen::Index>(resolution) * resolution;
  g.points.resize(p, n);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    const Eigen::Index i = idx % resolution;
    g.points(0, idx) = bounds.lower[0] + (static_cast<double>(i) + 0.5) * h[0];
    if (p == 2) {
      const Eigen::Index j = idx / resolution;
      g.points(1, idx) = bounds.lower[1] + (static_cast<double>(j) + 0.5) * h[1];
    }
  }
  g.weights = Vector::Constant(n, h.prod());
  return g;
}

GridEvaluation grid_evaluate(const std::function<Vector(const PointSet&)>& fn, const Box& bounds, int resolution) {
  GridEvaluation g = grid_points(bounds, resolution);
  g.values = fn(g.points);
  if (g.values.size() != g.points.cols()) throw DomainError("grid_evaluate: function returned the wrong size");
  return g;
}

double effective_sample_size(const Vector& weights) {
  const double s2 = weights.squaredNorm();
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

WeightedSamples self_normalized_is(const PointSet& points, const Vector& log_target, const Vector& log_instrumental) {
  const Eigen::Index n = points.cols();
  if (log_target.size() != n || log_instrumental.size() != n) {
    throw DomainError("self_normalized_is: size mismatch");
  }
  Vector lw(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (log_target[j] == -std::numeric_limits<double>::infinity()) {
      lw[j] = log_target[j];
      continue;
    }
    if (!std::isfinite(log_instrumental[j])) {
      throw DomainError("self_normalized_is: instrumental density vanishes where the target is positive");
    }
    lw[j] = log_target[j] - log_instrumental[j];
    if (std::isfinite(lw[j])) mx = std::max(mx, lw[j]);
  }
  if (!std::isfinite(mx)) throw DegenerateWeightsError("self_normalized_is: all weights are zero or non-finite");
  WeightedSamples ws;
  ws.points = points;
  ws.weights.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) ws.weights[j] = std::isfinite(lw[j]) ? std::exp(lw[j] - mx) : 0.0;
  ws.weights /= ws.weights.sum();
  ws.ess = effective_sample_size(ws.weights);
  return ws;
}

std::vector<Eigen::Index> thin_indices(Eigen::Index n, Eigen::Index target) {
  if (target < 1 || target > n) throw DomainError("thin: target must lie in [1, n]");
  std::vector<Eigen::Index> idx(target);
  for (Eigen::Index k = 0; k < target; ++k) idx[k] = ((k + 1) * n) / target - 1;
  return idx;
}

PointSet thin(const PointSet& samples, Eigen::Index target) {
  const auto idx = thin_indices(samples.cols(), target);
  PointSet out(samples.rows(), target);
  for (Eigen::Index k = 0; k < target; ++k) out.col(k) = samples.col(idx[k]);
  return out;
}

KdeResult weighted_kde_1d(const Vector& points, const Vector& weights, const Vector& eval_grid) {
  if (points.size() != weights.size() || points.size() == 0) throw DomainError("weighted_kde_1d: size mismatch");
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw DegenerateWeightsError("weighted_kde_1d: weights sum to zero");
  const Vector w = weights / wsum;
  const double mean = w.dot(points);
  const double var = w.dot((points.array() - mean).square().matrix());
  const double ess = effective_sample_size(w);
  KdeResult res;
  if (var > 1e-300 && std::sqrt(var) > 1e-12 * std::max(1.0, std::fabs(mean))) {
    res.bandwidth = 1.06 * std::sqrt(var) * std::pow(ess, -0.2);
  } else {
    res.point_mass = true;
    double spacing = 0.0;
    if (eval_grid.size() > 1) spacing = (eval_grid.maxCoeff() - eval_grid.minCoeff()) / (eval_grid.size() - 1);
    res.bandwidth = spacing > 0.0 ? 2.0 * spacing : 1e-3 * std::max(1.0, std::fabs(mean));
  }
  const double h = res.bandwidth;
  const double norm = 1.0 / (h * std::sqrt(2.0 * 3.14159265358979323846));
  const double wmax = w.maxCoeff();
  res.density = Vector::Zero(eval_grid.size());
  for (Eigen::Index j = 0; j < points.size(); ++j) {
    if (w[j] <= 1e-14 * wmax) continue;
    for (Eigen::Index g = 0; g < eval_grid.size(); ++g) {
      const double z = (eval_grid[g] - points[j]) / h;
      if (std::fabs(z) < 40.0) res.density[g] += w[j] * std::exp(-0.5 * z * z);
    }
  }
  res.density *= norm;
  return res;
}

}  // namespace babc
