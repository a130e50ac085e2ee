#pragma once

#include "babc/types.hpp"

#include <functional>

namespace babc::optim {

using Objective = std::function<double(const Vector&)>;
/// Objective that also writes its gradient when grad is non-null.
using GradObjective = std::function<double(const Vector&, Vector* grad)>;

struct LocalOptions {
  int max_iterations = 100;
  double step_tol = 1e-9;       ///< relative to the box width, per coordinate
  double rel_fun_tol = 1e-12;   ///< stop when the decrease is below this fraction of |f|
  double grad_tol = 1e-10;
  double fd_step = 1e-6;        ///< relative finite-difference step
  double initial_step = 0.1;    ///< first step is capped at this fraction of the width
};

struct LocalResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

/// Bounded quasi-Newton minimisation: BFGS on the free variables, projection onto the
/// box, Armijo backtracking along the projected path.
LocalResult minimize_box(const GradObjective& f, const Vector& x0, const Box& box, const LocalOptions& options = {});

/// Same, with central finite-difference gradients (one-sided at the bounds).
LocalResult minimize_box_fd(const Objective& f, const Vector& x0, const Box& box, const LocalOptions& options = {});

/// Finite-difference gradient used by minimize_box_fd; returns f(x).
double fd_gradient(const Objective& f, const Vector& x, const Box& box, double rel_step, Vector& grad,
                   int* evaluations = nullptr);

}  // namespace babc::optim
