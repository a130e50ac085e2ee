#include "babc/acquisition.hpp"

#include "babc/error.hpp"
#include "babc/optimize.hpp"
#include "babc/specfn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace babc {

using specfn::owen_t;

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::MAXV: return "MAXV";
    case AcquisitionKind::MAXMAD: return "MAXMAD";
    case AcquisitionKind::EIV: return "EIV";
    case AcquisitionKind::EIMAD: return "EIMAD";
    case AcquisitionKind::RAND: return "RAND";
    case AcquisitionKind::LCB: return "LCB";
  }
  return "?";
}

AcquisitionKind parse_acquisition(const std::string& name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto k : {AcquisitionKind::MAXV, AcquisitionKind::MAXMAD, AcquisitionKind::EIV, AcquisitionKind::EIMAD,
                 AcquisitionKind::RAND, AcquisitionKind::LCB}) {
    if (to_string(k) == up) return k;
  }
  throw ConfigError("unknown acquisition '" + name + "'");
}

Estimator estimator_for(AcquisitionKind kind) {
  return (kind == AcquisitionKind::MAXMAD || kind == AcquisitionKind::EIMAD) ? Estimator::Median : Estimator::Mean;
}

namespace {

bool variance_family(AcquisitionKind k) { return k == AcquisitionKind::MAXV || k == AcquisitionKind::EIV; }
bool mad_family(AcquisitionKind k) { return k == AcquisitionKind::MAXMAD || k == AcquisitionKind::EIMAD; }

}  // namespace

IntegrationBackend IntegrationBackend::grid(const Box& bounds, int resolution) {
  if (bounds.dim() > 2) throw DomainError("IntegrationBackend::grid: only for p <= 2");
  if (resolution < 10) throw DomainError("IntegrationBackend::grid: resolution must be >= 10");
  const GridEvaluation g = grid_points(bounds, resolution);
  IntegrationBackend be;
  be.type = Type::Grid;
  be.points = g.points;
  be.weights = g.weights;
  be.resolution = resolution;
  const Vector nw = be.weights / be.weights.sum();
  be.ess = effective_sample_size(nw);
  return be;
}

IntegrationBackend IntegrationBackend::importance(PointSet points, Vector weights) {
  IntegrationBackend be;
  be.type = Type::ImportanceSampling;
  be.points = std::move(points);
  be.weights = std::move(weights);
  be.validate();
  be.ess = effective_sample_size(be.weights);
  be.degenerate = be.weights.maxCoeff() > 1.0 - 1e-12 && be.weights.size() > 1;
  return be;
}

void IntegrationBackend::validate() const {
  if (points.cols() != weights.size() || points.cols() == 0) throw DomainError("IntegrationBackend: size mismatch");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw DomainError("IntegrationBackend: weights must be finite and nonnegative");
  }
  if (type == Type::ImportanceSampling && std::fabs(weights.sum() - 1.0) > 1e-9) {
    throw DomainError("IntegrationBackend: importance weights must sum to 1");
  }
  if (type == Type::Grid && resolution < 10) throw DomainError("IntegrationBackend: grid resolution must be >= 10");
}

double pointwise_uncertainty(AcquisitionKind kind, const ThresholdedBelief& b) {
  if (variance_family(kind)) return unnorm_variance(b);
  if (mad_family(kind)) return unnorm_mad(b);
  throw DomainError("pointwise_uncertainty: kind must be MAXV or MAXMAD");
}

double expected_pointwise_uncertainty(AcquisitionKind kind, const ThresholdedBelief& b, double tau2) {
  const double s2 = b.sd * b.sd;
  if (!std::isfinite(tau2) || tau2 < -1e-10 || tau2 > s2 + 1e-10) {
    throw DomainError("expected_pointwise_uncertainty: tau2 must lie in [0, s^2]");
  }
  tau2 = std::clamp(tau2, 0.0, s2);
  if (tau2 == 0.0) return pointwise_uncertainty(kind, b);
  if (b.prior_density == 0.0) return 0.0;
  const double a = a_t(b);
  const double n2 = b.noise_sd * b.noise_sd;
  if (variance_family(kind)) {
    const double t1 = owen_t(a, std::sqrt(n2 + s2 - tau2) / std::sqrt(n2 + s2 + tau2));
    const double t2 = owen_t(a, b.noise_sd / std::sqrt(n2 + 2.0 * s2));
    return std::max(2.0 * b.prior_density * b.prior_density * (t1 - t2), 0.0);
  }
  if (mad_family(kind)) {
    return 2.0 * b.prior_density * owen_t(a, std::sqrt(s2 - tau2) / std::sqrt(n2 + tau2));
  }
  throw DomainError("expected_pointwise_uncertainty: kind must be a variance or MAD acquisition");
}

// ---------------------------------------------------------------------------

namespace {

QueryFeatures select_columns(const QueryFeatures& f, const std::vector<Eigen::Index>& idx) {
  QueryFeatures out;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.points.resize(f.points.rows(), n);
  out.v.resize(f.v.rows(), n);
  out.w.resize(f.w.rows(), n);
  out.mean.resize(n);
  out.var.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.points.col(k) = f.points.col(idx[k]);
    out.v.col(k) = f.v.col(idx[k]);
    out.w.col(k) = f.w.col(idx[k]);
    out.mean[k] = f.mean[idx[k]];
    out.var[k] = f.var[idx[k]];
  }
  return out;
}

}  // namespace

ExpectedLoss::ExpectedLoss(const GpPosterior& post, AcquisitionKind kind, double epsilon, const UniformPrior& prior,
                           IntegrationBackend backend, double prune_tol)
    : post_(&post), kind_(kind), backend_(std::move(backend)) {
  if (!is_expected_loss(kind)) throw DomainError("ExpectedLoss: kind must be EIV or EIMAD");
  backend_.validate();
  const QueryFeatures full = post.features(backend_.points);
  const BeliefField bf = BeliefField::from_features(full, epsilon, post.hyper().noise_sd(), prior);
  Vector g0(bf.size());
  for (int j = 0; j < bf.size(); ++j) g0[j] = pointwise_uncertainty(kind, bf.at(j));
  const double total = backend_.weights.dot(g0);
  for (int j = 0; j < bf.size(); ++j) {
    const double c = backend_.weights[j] * g0[j];
    if (c > 0.0 && c >= prune_tol * total) active_.push_back(j);
  }
  feats_ = select_columns(full, active_);
  const auto n = static_cast<Eigen::Index>(active_.size());
  belief_.epsilon = epsilon;
  belief_.noise_sd = bf.noise_sd;
  belief_.prior_density.resize(n);
  belief_.mean.resize(n);
  belief_.sd.resize(n);
  weights_.resize(n);
  base_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = active_[k];
    belief_.prior_density[k] = bf.prior_density[j];
    belief_.mean[k] = bf.mean[j];
    belief_.sd[k] = bf.sd[j];
    weights_[k] = backend_.weights[j];
    base_[k] = g0[j];
  }
}

double ExpectedLoss::baseline() const { return weights_.dot(base_); }

double ExpectedLoss::integrate(const Vector& tau2) const {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < weights_.size(); ++k) {
    const double g =
        tau2[k] <= 0.0 ? base_[k] : expected_pointwise_uncertainty(kind_, belief_.at(static_cast<int>(k)), tau2[k]);
    sum += weights_[k] * g;
  }
  return sum;
}

ExpectedLoss::Pending ExpectedLoss::empty_pending() const {
  Pending p;
  p.features = post_->features(PointSet(post_->dim(), 0));
  p.u = Matrix(0, weights_.size());
  p.tau2 = Vector::Zero(weights_.size());
  p.g = base_;
  return p;
}

ExpectedLoss::Pending ExpectedLoss::extend(const Pending& fixed, const Vector& theta) const {
  PointSet pts(post_->dim(), fixed.size() + 1);
  if (fixed.size() > 0) pts.leftCols(fixed.size()) = fixed.features.points;
  pts.col(fixed.size()) = theta;
  Pending p;
  p.features = post_->features(pts);
  Matrix s = post_->covariance(p.features, p.features);
  s = 0.5 * (s + s.transpose());
  s.diagonal().array() += post_->noise_var();
  p.chol.compute(s);
  if (p.chol.info() != Eigen::Success) throw IllConditionedError("ExpectedLoss::extend: singular pending block");
  p.u = p.chol.matrixL().solve(post_->covariance(p.features, feats_));
  p.tau2 = p.u.colwise().squaredNorm().transpose();
  p.tau2 = p.tau2.cwiseMax(0.0).cwiseMin(feats_.var);
  p.g.resize(weights_.size());
  for (Eigen::Index k = 0; k < weights_.size(); ++k) {
    const double t = std::min(p.tau2[k], belief_.sd[k] * belief_.sd[k]);
    p.g[k] = t <= 0.0 ? base_[k] : expected_pointwise_uncertainty(kind_, belief_.at(static_cast<int>(k)), t);
  }
  return p;
}

double ExpectedLoss::value(const PointSet& pending) const {
  Pending p = empty_pending();
  for (Eigen::Index j = 0; j < pending.cols(); ++j) p = extend(p, pending.col(j));
  return weights_.dot(p.g);
}

Vector ExpectedLoss::value_appended(const Pending& fixed, const PointSet& candidates) const {
  const Eigen::Index m = candidates.cols();
  const Eigen::Index n = weights_.size();
  Vector out(m);
  if (n == 0) {
    out.setZero();
    return out;
  }
  const QueryFeatures fe = post_->features(candidates);
  Matrix r = post_->covariance(fe, feats_);  // m x n
  Vector schur = fe.var.array() + post_->noise_var();
  if (fixed.size() > 0) {
    const Matrix uc = fixed.chol.matrixL().solve(post_->covariance(fixed.features, fe));  // b x m
    r.noalias() -= uc.transpose() * fixed.u;
    schur -= uc.colwise().squaredNorm().transpose();
  }
  const double floor = 1e-12 * post_->noise_var();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double si = std::max(schur[i], floor);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s2 = belief_.sd[k] * belief_.sd[k];
      const double inc = r(i, k) * r(i, k) / si;
      double g;
      if (inc <= 1e-15 * s2) {
        g = fixed.g[k];
      } else {
        const double t = std::min(fixed.tau2[k] + inc, s2);
        g = expected_pointwise_uncertainty(kind_, belief_.at(static_cast<int>(k)), t);
      }
      sum += weights_[k] * g;
    }
    out[i] = sum;
  }
  return out;
}

IntegrationBackend prepare_backend(const GpPosterior& post, AcquisitionKind kind, double epsilon,
                                   const UniformPrior& prior, const BackendOptions& options, Rng& rng) {
  const Box& box = prior.box;
  if (box.dim() <= 2) return IntegrationBackend::grid(box, options.grid_resolution);

  const double noise_sd = post.hyper().noise_sd();
  auto log_q = [&](const PointSet& x) {
    const QueryFeatures f = post.features(x);
    const BeliefField bf = BeliefField::from_features(f, epsilon, noise_sd, prior);
    Vector out(bf.size());
    for (int j = 0; j < bf.size(); ++j) {
      const double g = pointwise_uncertainty(kind, bf.at(j));
      out[j] = g > 0.0 ? std::log(g) : -std::numeric_limits<double>::infinity();
    }
    return out;
  };

  const Vector at_data = log_q(post.data().points);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < at_data.size(); ++j) {
    if (at_data[j] > at_data[best]) best = j;
  }
  if (!std::isfinite(at_data[best])) {
    // Integrand underflows at every evaluated point; fall back to prior draws.
    const PointSet pts = box.sample(rng, options.is_points);
    return IntegrationBackend::importance(pts, Vector::Constant(options.is_points, 1.0 / options.is_points));
  }

  McmcConfig cfg;
  cfg.chain_count = options.mcmc_chains;
  cfg.chain_length = options.mcmc_length;
  cfg.adaptation_start = options.mcmc_length / 5;
  cfg.bounds = box;
  cfg.start = post.data().points.col(best);
  const McmcResult mc = adaptive_metropolis(BatchLogDensity(log_q), cfg, rng);
  const Eigen::Index target = std::min<Eigen::Index>(options.is_points, mc.samples.cols());
  const auto idx = thin_indices(mc.samples.cols(), target);
  PointSet pts(box.dim(), target);
  Vector lq(target);
  for (Eigen::Index k = 0; k < target; ++k) {
    pts.col(k) = mc.samples.col(idx[k]);
    lq[k] = mc.log_density[idx[k]];
  }
  // Weights proportional to 1 / q.
  const double lmin = lq.minCoeff();
  Vector w = (-(lq.array() - lmin)).exp().matrix();
  w /= w.sum();
  return IntegrationBackend::importance(pts, w);
}

// ---------------------------------------------------------------------------

OptimizeResult optimize_acquisition(const BatchObjective& objective, const Box& bounds, Rng& rng,
                                    const OptimizeOptions& options) {
  const int p = bounds.dim();
  const int n = options.random_points > 0 ? options.random_points : (p <= 2 ? 1000 : 2000);
  const PointSet x = bounds.sample(rng, n);
  Vector vals = objective(x);
  if (vals.size() != n) throw DomainError("optimize_acquisition: objective returned the wrong size");
  const double ninf = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(vals[j])) {
      vals[j] = ninf;
    } else {
      any = true;
    }
  }
  if (!any) throw NumericalError("optimize_acquisition: objective is non-finite at every random point");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] > vals[b]; });

  OptimizeResult res;
  res.evaluations = n;
  res.x = x.col(order[0]);
  res.value = vals[order[0]];

  auto single = [&](const Vector& v) {
    const double f = objective(v)[0];
    return std::isfinite(f) ? -f : std::numeric_limits<double>::infinity();
  };
  optim::LocalOptions lopt;
  lopt.max_iterations = options.local_iterations;
  lopt.step_tol = 1e-10;
  const int refine = std::min(options.refine, n);
  for (int r = 0; r < refine; ++r) {
    if (!std::isfinite(vals[order[r]])) break;
    const optim::LocalResult lr = optim::minimize_box_fd(single, x.col(order[r]), bounds, lopt);
    res.evaluations += lr.evaluations;
    if (std::isfinite(lr.value) && -lr.value > res.value) {
      res.value = -lr.value;
      res.x = lr.x;
    }
  }
  if (!bounds.contains(res.x)) {
    res.x = bounds.clamp(res.x);
    res.clipped = true;
  }
  return res;
}

OptimizeResult optimize_acquisition(const std::function<double(const Vector&)>& objective, const Box& bounds,
                                    Rng& rng, const OptimizeOptions& options) {
  auto batch = [&](const PointSet& x) {
    Vector out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[j] = objective(x.col(j));
    return out;
  };
  return optimize_acquisition(BatchObjective(batch), bounds, rng, options);
}

CandidateBatch greedy_batch(AcquisitionKind kind, const AcquisitionContext& ctx, int b, Rng& rng) {
  if (b < 1) throw DomainError("greedy_batch: batch size must be >= 1");
  const Box& box = ctx.prior.box;
  CandidateBatch out;
  out.kind = kind;
  out.points.resize(box.dim(), b);
  out.values = Vector::Zero(b);

  if (kind == AcquisitionKind::RAND) {
    out.points = box.sample(rng, b);
    return out;
  }
  if (ctx.post == nullptr) throw DomainError("greedy_batch: posterior required");
  const GpPosterior& post = *ctx.post;

  if (kind == AcquisitionKind::LCB) {
    if (b != 1) throw ConfigError("greedy_batch: LCB supports batch size 1 only");
    const double beta = ctx.lcb_beta;
    auto obj = [&](const PointSet& x) {
      Vector m, v;
      post.predict_marginal(x, m, v);
      return Vector(-(m.array() - beta * v.array().sqrt()));
    };
    const OptimizeResult r = optimize_acquisition(BatchObjective(obj), box, rng, ctx.optimizer);
    out.points.col(0) = r.x;
    out.values[0] = -r.value;
    out.clipped += r.clipped ? 1 : 0;
    return out;
  }

  if (is_expected_loss(kind)) {
    if (ctx.loss == nullptr || ctx.loss->kind() != kind) throw DomainError("greedy_batch: matching ExpectedLoss required");
    const ExpectedLoss& loss = *ctx.loss;
    ExpectedLoss::Pending fixed = loss.empty_pending();
    for (int r = 0; r < b; ++r) {
      auto obj = [&](const PointSet& x) { return Vector(-loss.value_appended(fixed, x)); };
      const OptimizeResult res = optimize_acquisition(BatchObjective(obj), box, rng, ctx.optimizer);
      out.points.col(r) = res.x;
      out.values[r] = -res.value;
      out.clipped += res.clipped ? 1 : 0;
      fixed = loss.extend(fixed, res.x);
    }
    return out;
  }

  // MAXV / MAXMAD, with the expected pointwise uncertainty given earlier batch points.
  const double noise_sd = post.hyper().noise_sd();
  for (int r = 0; r < b; ++r) {
    const PointSet pending = out.points.leftCols(r);
    const QueryFeatures fp = post.features(pending);
    auto obj = [&](const PointSet& x) {
      const QueryFeatures fx = post.features(x);
      const BeliefField bf = BeliefField::from_features(fx, ctx.epsilon, noise_sd, ctx.prior);
      Vector tau2 = Vector::Zero(x.cols());
      if (r > 0) tau2 = post.lookahead_var_reduction(fx, fp);
      Vector val(x.cols());
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const ThresholdedBelief bj = bf.at(static_cast<int>(j));
        val[j] = expected_pointwise_uncertainty(kind, bj, std::min(tau2[j], bj.sd * bj.sd));
      }
      return val;
    };
    const OptimizeResult res = optimize_acquisition(BatchObjective(obj), box, rng, ctx.optimizer);
    out.points.col(r) = res.x;
    out.values[r] = res.value;
    out.clipped += res.clipped ? 1 : 0;
  }
  return out;
}

Eigen::Index lcb_select(const GpPosterior& post, double beta, const PointSet& grid) {
  if (!std::isfinite(beta)) throw DomainError("lcb_select: beta must be finite");
  Vector m, v;
  post.predict_marginal(grid, m, v);
  const Vector lcb = m.array() - beta * v.array().sqrt();
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < lcb.size(); ++j) {
    if (lcb[j] < lcb[best]) best = j;
  }
  return best;
}

Vector lcb_select(const GpPosterior& post, double beta, const Box& bounds, Rng& rng) {
  if (!std::isfinite(beta)) throw DomainError("lcb_select: beta must be finite");
  auto obj = [&](const PointSet& x) {
    Vector m, v;
    post.predict_marginal(x, m, v);
    return Vector(-(m.array() - beta * v.array().sqrt()));
  };
  return optimize_acquisition(BatchObjective(obj), bounds, rng).x;
}

}  // namespace babc
