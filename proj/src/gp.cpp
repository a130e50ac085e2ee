#include "babc/gp.hpp"

#include "babc/error.hpp"

#include <array>
#include <cmath>
#include <string>

namespace babc {

DiscrepancyDataset::DiscrepancyDataset(PointSet pts, Vector vals, Box box)
    : points(std::move(pts)), values(std::move(vals)), bounds(std::move(box)) {
  validate();
}

void DiscrepancyDataset::append(const Vector& theta, double delta) {
  if (theta.size() != bounds.dim()) throw DomainError("DiscrepancyDataset::append: dimension mismatch");
  if (!std::isfinite(delta)) throw DomainError("DiscrepancyDataset::append: non-finite discrepancy");
  const Eigen::Index t = values.size();
  points.conservativeResize(bounds.dim(), t + 1);
  values.conservativeResize(t + 1);
  points.col(t) = theta;
  values[t] = delta;
}

void DiscrepancyDataset::append(const PointSet& thetas, const Vector& deltas) {
  if (thetas.cols() != deltas.size()) throw DomainError("DiscrepancyDataset::append: size mismatch");
  for (Eigen::Index j = 0; j < deltas.size(); ++j) append(Vector(thetas.col(j)), deltas[j]);
}

DiscrepancyDataset DiscrepancyDataset::prefix(int n) const {
  if (n < 0 || n > size()) throw DomainError("DiscrepancyDataset::prefix: out of range");
  DiscrepancyDataset out;
  out.points = points.leftCols(n);
  out.values = values.head(n);
  out.bounds = bounds;
  return out;
}

void DiscrepancyDataset::validate() const {
  if (bounds.dim() < 1) throw DomainError("DiscrepancyDataset: parameter dimension must be >= 1");
  if (points.cols() != values.size()) throw DomainError("DiscrepancyDataset: |points| != |values|");
  if (values.size() > 0 && points.rows() != bounds.dim()) {
    throw DomainError("DiscrepancyDataset: point dimension does not match bounds");
  }
  const double slack = 1e-9 * bounds.width().maxCoeff();
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) throw DomainError("DiscrepancyDataset: non-finite discrepancy");
    if (!bounds.contains(points.col(j), slack)) throw DomainError("DiscrepancyDataset: point outside bounds");
  }
}

void GpHyper::validate(int dim) const {
  if (!(noise_var > 0 && std::isfinite(noise_var))) throw DomainError("GpHyper: noise variance must be > 0");
  if (!(signal_var > 0 && std::isfinite(signal_var))) throw DomainError("GpHyper: signal variance must be > 0");
  if (lengthscales.size() != dim) throw DomainError("GpHyper: need one lengthscale per dimension");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0 && std::isfinite(lengthscales[i]))) {
      throw DomainError("GpHyper: lengthscales must be > 0");
    }
  }
}

double GpHyper::noise_sd() const { return std::sqrt(noise_var); }

BasisSpec BasisSpec::quadratic(int dim, double prior_variance) { return of_degree(dim, 2, prior_variance); }

BasisSpec BasisSpec::of_degree(int dim, int degree, double prior_variance) {
  BasisSpec b;
  b.degree = degree;
  const int r = b.size(dim);
  b.prior_mean = Vector::Zero(r);
  b.prior_cov = prior_variance * Matrix::Identity(r, r);
  return b;
}

int BasisSpec::size(int dim) const { return 1 + (degree >= 1 ? dim : 0) + (degree >= 2 ? dim : 0); }

Matrix BasisSpec::evaluate(const PointSet& x) const {
  const int p = static_cast<int>(x.rows());
  Matrix h(size(p), x.cols());
  h.row(0).setOnes();
  if (degree >= 1) h.middleRows(1, p) = x;
  if (degree >= 2) h.middleRows(1 + p, p) = x.array().square().matrix();
  return h;
}

void BasisSpec::validate(int dim) const {
  if (degree < 0 || degree > 2) throw DomainError("BasisSpec: degree must be 0, 1 or 2");
  const int r = size(dim);
  if (prior_mean.size() != r || prior_cov.rows() != r || prior_cov.cols() != r) {
    throw DomainError("BasisSpec: prior dimensions do not match the basis size");
  }
  if (!prior_cov.isApprox(prior_cov.transpose())) throw DomainError("BasisSpec: prior covariance not symmetric");
  Eigen::LLT<Matrix> llt(prior_cov);
  if (llt.info() != Eigen::Success) throw DomainError("BasisSpec: prior covariance not positive definite");
}

Matrix se_kernel(const PointSet& x, const PointSet& y, const GpHyper& hyper) {
  const Eigen::Index p = x.rows();
  const Vector inv_l = hyper.lengthscales.cwiseInverse();
  const Matrix xs = inv_l.asDiagonal() * x;
  const Matrix ys = inv_l.asDiagonal() * y;
  Matrix k(x.cols(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      double d2 = 0.0;
      for (Eigen::Index d = 0; d < p; ++d) {
        const double diff = xs(d, i) - ys(d, j);
        d2 += diff * diff;
      }
      k(i, j) = d2;
    }
  }
  return hyper.signal_var * (-0.5 * k.array()).exp().matrix();
}

double robust_cholesky(const Matrix& m, Eigen::LLT<Matrix>& out, double first_jitter) {
  static constexpr std::array<double, 7> kLadder = {1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
  out.compute(m);
  if (out.info() == Eigen::Success && first_jitter == 0.0) return 0.0;
  const double mean_diag = m.diagonal().mean();
  if (first_jitter > 0.0) {
    out.compute(m + first_jitter * Matrix::Identity(m.rows(), m.cols()));
    if (out.info() == Eigen::Success) return first_jitter;
  }
  for (double rel : kLadder) {
    const double j = rel * std::fabs(mean_diag);
    out.compute(m + j * Matrix::Identity(m.rows(), m.cols()));
    if (out.info() == Eigen::Success) return j;
  }
  throw IllConditionedError("Cholesky failed after jitter escalation up to 1e-4 of the mean diagonal (n=" +
                            std::to_string(m.rows()) + ")");
}

GpPosterior GpPosterior::fit(const DiscrepancyDataset& data, const GpHyper& hyper, const BasisSpec& basis) {
  data.validate();
  if (data.size() == 0) throw DomainError("GpPosterior::fit: dataset is empty");
  hyper.validate(data.dim());
  basis.validate(data.dim());

  GpPosterior post;
  post.data_ = data;
  post.hyper_ = hyper;
  post.basis_ = basis;

  const int t = data.size();
  Matrix k = se_kernel(data.points, data.points, hyper);
  k.diagonal().array() += hyper.noise_var;
  post.jitter_ = robust_cholesky(k, post.chol_k_);

  const Matrix h = basis.evaluate(data.points);
  post.g_ = post.chol_k_.matrixL().solve(h.transpose());
  Eigen::LLT<Matrix> chol_b(basis.prior_cov);
  const Matrix b_inv = chol_b.solve(Matrix::Identity(basis.prior_cov.rows(), basis.prior_cov.cols()));
  Matrix a = b_inv + post.g_.transpose() * post.g_;
  robust_cholesky(a, post.chol_a_);

  post.alpha_ = post.chol_k_.solve(data.values);
  const Vector z = post.chol_k_.matrixL().solve(data.values);
  post.gamma_ = post.chol_a_.solve(post.g_.transpose() * z + b_inv * basis.prior_mean);
  (void)t;
  return post;
}

QueryFeatures GpPosterior::features(const PointSet& query) const {
  QueryFeatures f;
  f.points = query;
  const Matrix kq = se_kernel(data_.points, query, hyper_);
  f.v = chol_k_.matrixL().solve(kq);
  const Matrix r = basis_.evaluate(query) - g_.transpose() * f.v;
  f.w = chol_a_.matrixL().solve(r);
  f.mean = kq.transpose() * alpha_ + r.transpose() * gamma_;
  f.var = (hyper_.signal_var - f.v.colwise().squaredNorm().array() + f.w.colwise().squaredNorm().array())
              .max(0.0)
              .matrix()
              .transpose();
  return f;
}

Matrix GpPosterior::covariance(const QueryFeatures& x, const QueryFeatures& y) const {
  Matrix c = se_kernel(x.points, y.points, hyper_);
  c.noalias() -= x.v.transpose() * y.v;
  c.noalias() += x.w.transpose() * y.w;
  return c;
}

Prediction GpPosterior::predict(const PointSet& query) const {
  const QueryFeatures f = features(query);
  Prediction out;
  out.mean = f.mean;
  Matrix c = covariance(f, f);
  out.cov = 0.5 * (c + c.transpose());
  for (Eigen::Index i = 0; i < out.cov.rows(); ++i) out.cov(i, i) = std::max(out.cov(i, i), 0.0);
  return out;
}

void GpPosterior::predict_marginal(const PointSet& query, Vector& mean, Vector& var) const {
  QueryFeatures f = features(query);
  mean = std::move(f.mean);
  var = std::move(f.var);
}

Vector GpPosterior::predict_mean(const PointSet& query) const {
  const Matrix kq = se_kernel(data_.points, query, hyper_);
  const Matrix v = chol_k_.matrixL().solve(kq);
  const Matrix r = basis_.evaluate(query) - g_.transpose() * v;
  return kq.transpose() * alpha_ + r.transpose() * gamma_;
}

Vector GpPosterior::lookahead_var_reduction(const QueryFeatures& query, const QueryFeatures& pending) const {
  if (pending.points.cols() == 0) throw DomainError("lookahead_var_reduction: pending set is empty");
  Matrix s = covariance(pending, pending);
  s = 0.5 * (s + s.transpose());
  s.diagonal().array() += hyper_.noise_var;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw IllConditionedError("lookahead_var_reduction: singular pending block");
  const Matrix c = covariance(pending, query);  // b x n
  const Matrix u = llt.matrixL().solve(c);
  Vector tau2 = u.colwise().squaredNorm().transpose();
  return tau2.cwiseMax(0.0).cwiseMin(query.var);
}

double GpPosterior::lookahead_var_reduction(const Vector& theta, const PointSet& pending) const {
  const QueryFeatures q = features(theta);
  const QueryFeatures pf = features(pending);
  return lookahead_var_reduction(q, pf)[0];
}

Matrix GpPosterior::sample_paths(const PointSet& eval_points, int count, Rng& rng) const {
  const Eigen::Index n = eval_points.cols();
  if (count < 0) throw DomainError("sample_paths: negative count");
  if (count == 0) return Matrix(0, n);
  const QueryFeatures f = features(eval_points);
  Matrix c = covariance(f, f);
  c = 0.5 * (c + c.transpose());
  Eigen::LLT<Matrix> llt;
  robust_cholesky(c, llt);
  c.resize(0, 0);

  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = normal(rng);
  }
  Matrix paths = llt.matrixL() * z;
  paths.colwise() += f.mean;
  return paths.transpose();
}

}  // namespace babc
