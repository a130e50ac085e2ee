#include "babc/error.hpp"
#include "babc/gp.hpp"
#include "babc/optimize.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace babc {

namespace {

constexpr double kBoundLogSds = 7.0;

double sample_sd(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

double LogNormalPrior::log_density_of_log(double log_value) const {
  const double z = (log_value - log_mean) / log_sd;
  return -0.5 * z * z - std::log(log_sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

HyperPriors HyperPriors::defaults_for(const DiscrepancyDataset& data) {
  HyperPriors pr;
  const double scale = std::max(1.0, data.values.size() > 0 ? data.values.cwiseAbs().maxCoeff() : 1.0);
  const double sd = std::max(sample_sd(data.values), 1e-6 * scale);
  pr.signal_sd = {std::log(sd), 1.0};
  pr.noise_sd = {std::log(0.1 * sd), 1.0};
  const Vector w = data.bounds.width();
  pr.lengthscales.clear();
  for (Eigen::Index i = 0; i < w.size(); ++i) pr.lengthscales.push_back({std::log(0.5 * w[i]), 1.0});
  return pr;
}

GpHyper HyperPriors::mode() const {
  Vector x(2 + lengthscales.size());
  x[0] = noise_sd.log_mean;
  x[1] = signal_sd.log_mean;
  for (std::size_t i = 0; i < lengthscales.size(); ++i) x[2 + i] = lengthscales[i].log_mean;
  return hyper_from_log(x);
}

GpHyper HyperPriors::draw(Rng& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector x(2 + lengthscales.size());
  x[0] = noise_sd.log_mean + noise_sd.log_sd * n01(rng);
  x[1] = signal_sd.log_mean + signal_sd.log_sd * n01(rng);
  for (std::size_t i = 0; i < lengthscales.size(); ++i) {
    x[2 + i] = lengthscales[i].log_mean + lengthscales[i].log_sd * n01(rng);
  }
  return hyper_from_log(x);
}

Vector hyper_to_log(const GpHyper& h) {
  Vector x(2 + h.lengthscales.size());
  x[0] = 0.5 * std::log(h.noise_var);
  x[1] = 0.5 * std::log(h.signal_var);
  x.tail(h.lengthscales.size()) = h.lengthscales.array().log().matrix();
  return x;
}

GpHyper hyper_from_log(const Vector& x) {
  GpHyper h;
  h.noise_var = std::exp(2.0 * x[0]);
  h.signal_var = std::exp(2.0 * x[1]);
  h.lengthscales = x.tail(x.size() - 2).array().exp().matrix();
  return h;
}

double log_marginal_likelihood(const DiscrepancyDataset& data, const BasisSpec& basis, const GpHyper& hyper,
                               Vector* grad) {
  data.validate();
  hyper.validate(data.dim());
  basis.validate(data.dim());
  const int t = data.size();
  const int p = data.dim();
  if (t == 0) throw DomainError("log_marginal_likelihood: empty dataset");

  const Matrix kse = se_kernel(data.points, data.points, hyper);
  Matrix k = kse;
  k.diagonal().array() += hyper.noise_var;
  Eigen::LLT<Matrix> chol_k;
  robust_cholesky(k, chol_k);

  const Matrix h = basis.evaluate(data.points);
  const Vector y = data.values - h.transpose() * basis.prior_mean;
  const Matrix g = chol_k.matrixL().solve(h.transpose());
  Eigen::LLT<Matrix> chol_b(basis.prior_cov);
  const Matrix b_inv = chol_b.solve(Matrix::Identity(basis.prior_cov.rows(), basis.prior_cov.cols()));
  Matrix a = b_inv + g.transpose() * g;
  Eigen::LLT<Matrix> chol_a;
  robust_cholesky(a, chol_a);

  const Vector z = chol_k.matrixL().solve(y);
  const Vector u = chol_a.matrixL().solve(g.transpose() * z);
  const double quad = z.squaredNorm() - u.squaredNorm();
  double logdet = 0.0;
  logdet += 2.0 * chol_k.matrixLLT().diagonal().array().log().sum();
  logdet += 2.0 * chol_b.matrixLLT().diagonal().array().log().sum();
  logdet += 2.0 * chol_a.matrixLLT().diagonal().array().log().sum();
  const double lml = -0.5 * quad - 0.5 * logdet - 0.5 * t * std::log(2.0 * std::numbers::pi);

  if (grad) {
    // Ky^{-1} = L^{-T} (I - G A^{-1} G^T) L^{-1}
    const Vector au = chol_a.matrixU().solve(u);
    const Vector alpha = chol_k.matrixU().solve(Vector(z - g * au));
    Matrix linv = chol_k.matrixL().solve(Matrix::Identity(t, t));
    const Matrix n = chol_a.matrixL().solve(g.transpose()) * linv;
    Matrix pm = linv.transpose() * linv;
    pm.noalias() -= n.transpose() * n;
    const Matrix wm = alpha * alpha.transpose() - pm;  // d lml / dK = wm / 2

    grad->resize(2 + p);
    (*grad)[0] = hyper.noise_var * wm.trace();
    (*grad)[1] = (wm.array() * kse.array()).sum();
    for (int d = 0; d < p; ++d) {
      const double l2 = hyper.lengthscales[d] * hyper.lengthscales[d];
      double s = 0.0;
      for (int j = 0; j < t; ++j) {
        for (int i = 0; i < t; ++i) {
          const double diff = data.points(d, i) - data.points(d, j);
          s += wm(i, j) * kse(i, j) * diff * diff / l2;
        }
      }
      (*grad)[2 + d] = 0.5 * s;
    }
  }
  return lml;
}

double map_objective(const DiscrepancyDataset& data, const BasisSpec& basis, const HyperPriors& priors,
                     const GpHyper& hyper, Vector* grad) {
  if (static_cast<int>(priors.lengthscales.size()) != data.dim()) {
    throw DomainError("map_objective: one lengthscale prior per dimension required");
  }
  double val = log_marginal_likelihood(data, basis, hyper, grad);
  const Vector x = hyper_to_log(hyper);
  auto add = [&](const LogNormalPrior& pr, Eigen::Index i) {
    val += pr.log_density_of_log(x[i]);
    if (grad) (*grad)[i] -= (x[i] - pr.log_mean) / (pr.log_sd * pr.log_sd);
  };
  add(priors.noise_sd, 0);
  add(priors.signal_sd, 1);
  for (std::size_t i = 0; i < priors.lengthscales.size(); ++i) add(priors.lengthscales[i], 2 + i);
  return val;
}

MapResult map_hyperparameters(const DiscrepancyDataset& data, const BasisSpec& basis, const HyperPriors& priors,
                              const GpHyper& init, Rng& rng, const MapOptions& options) {
  init.validate(data.dim());
  const Eigen::Index n = 2 + data.dim();
  Vector lo(n), hi(n);
  auto set_bounds = [&](const LogNormalPrior& pr, Eigen::Index i) {
    lo[i] = pr.log_mean - kBoundLogSds * pr.log_sd;
    hi[i] = pr.log_mean + kBoundLogSds * pr.log_sd;
  };
  set_bounds(priors.noise_sd, 0);
  set_bounds(priors.signal_sd, 1);
  for (int i = 0; i < data.dim(); ++i) set_bounds(priors.lengthscales[i], 2 + i);
  const Box box(lo, hi);

  auto neg = [&](const Vector& x, Vector* g) {
    try {
      const double v = map_objective(data, basis, priors, hyper_from_log(x), g);
      if (g) *g = -*g;
      return -v;
    } catch (const Error&) {
      if (g) g->setZero(x.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  MapResult res;
  res.hyper = init;
  double init_obj = -std::numeric_limits<double>::infinity();
  try {
    init_obj = map_objective(data, basis, priors, init);
  } catch (const Error&) {
  }
  res.init_objective = init_obj;
  res.objective = init_obj;

  optim::LocalOptions lopt;
  lopt.max_iterations = options.max_iterations;
  lopt.initial_step = 0.05;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    const Vector x0 = r == 0 ? box.clamp(hyper_to_log(init)) : box.clamp(hyper_to_log(priors.draw(rng)));
    const optim::LocalResult lr = optim::minimize_box(neg, x0, box, lopt);
    if (!std::isfinite(lr.value)) continue;
    ++res.successful_restarts;
    if (-lr.value > res.objective) {
      res.objective = -lr.value;
      res.hyper = hyper_from_log(lr.x);
    }
  }
  res.improved = res.objective > init_obj;
  return res;
}

}  // namespace babc
