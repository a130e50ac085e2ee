#include "babc/optimize.hpp"

#include <cmath>
#include <limits>

namespace babc::optim {

double fd_gradient(const Objective& f, const Vector& x, const Box& box, double rel_step, Vector& grad,
                   int* evaluations) {
  const Eigen::Index p = x.size();
  grad.resize(p);
  const double f0 = f(x);
  int evals = 1;
  const Vector width = box.width();
  for (Eigen::Index i = 0; i < p; ++i) {
    const double h = rel_step * width[i];
    Vector xp = x;
    Vector xm = x;
    const bool room_up = x[i] + h <= box.upper[i];
    const bool room_down = x[i] - h >= box.lower[i];
    if (room_up && room_down) {
      xp[i] += h;
      xm[i] -= h;
      grad[i] = (f(xp) - f(xm)) / (2.0 * h);
      evals += 2;
    } else if (room_up) {
      xp[i] += h;
      grad[i] = (f(xp) - f0) / h;
      evals += 1;
    } else {
      xm[i] -= h;
      grad[i] = (f0 - f(xm)) / h;
      evals += 1;
    }
    if (!std::isfinite(grad[i])) grad[i] = 0.0;
  }
  if (evaluations) *evaluations += evals;
  return f0;
}

LocalResult minimize_box(const GradObjective& f, const Vector& x0, const Box& box, const LocalOptions& options) {
  const Eigen::Index p = x0.size();
  const Vector width = box.width();
  LocalResult res;
  res.x = box.clamp(x0);
  Vector g(p);
  res.value = f(res.x, &g);
  ++res.evaluations;
  if (!std::isfinite(res.value)) return res;

  // Initial inverse Hessian diag(width^2), scaled so the first step moves no coordinate
  // by more than initial_step of its width.
  auto scaled_identity = [&](const Vector& grad) {
    Matrix h = width.cwiseProduct(width).asDiagonal();
    const double gmax = grad.cwiseProduct(width).lpNorm<Eigen::Infinity>();
    if (gmax > 0) h *= options.initial_step / gmax;
    return h;
  };
  Matrix hinv = scaled_identity(g);

  auto free_mask = [&](const Vector& x, const Vector& grad) {
    Eigen::Array<bool, Eigen::Dynamic, 1> free(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const bool at_lo = x[i] <= box.lower[i] && grad[i] > 0;
      const bool at_hi = x[i] >= box.upper[i] && grad[i] < 0;
      free[i] = !(at_lo || at_hi);
    }
    return free;
  };

  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    const auto free = free_mask(res.x, g);
    Vector gf = g;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!free[i]) gf[i] = 0.0;
    }
    if (gf.cwiseProduct(width).lpNorm<Eigen::Infinity>() <= options.grad_tol * (1.0 + std::fabs(res.value))) {
      res.converged = true;
      break;
    }
    Vector d = -(hinv * gf);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!free[i]) d[i] = 0.0;
    }
    if (gf.dot(d) >= 0) {
      hinv = scaled_identity(gf);
      d = -(hinv * gf);
    }

    double step = 1.0;
    Vector x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = box.clamp(res.x + step * d);
      f_new = f(x_new, nullptr);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
      if (((x_new - res.x).cwiseAbs().cwiseQuotient(width)).maxCoeff() < options.step_tol) break;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    Vector g_new(p);
    f_new = f(x_new, &g_new);
    ++res.evaluations;
    const Vector s = x_new - res.x;
    const Vector y = g_new - g;
    const double decrease = res.value - f_new;
    res.x = x_new;
    res.value = f_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(p, p);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if ((s.cwiseAbs().cwiseQuotient(width)).maxCoeff() < options.step_tol ||
        decrease <= options.rel_fun_tol * std::fabs(res.value)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

LocalResult minimize_box_fd(const Objective& f, const Vector& x0, const Box& box, const LocalOptions& options) {
  int evals = 0;
  auto wrapped = [&](const Vector& x, Vector* grad) {
    if (grad) return fd_gradient(f, x, box, options.fd_step, *grad, &evals);
    ++evals;
    return f(x);
  };
  LocalResult res = minimize_box(wrapped, x0, box, options);
  res.evaluations = evals;
  return res;
}

}  // namespace babc::optim
