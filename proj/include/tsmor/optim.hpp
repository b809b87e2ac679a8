#pragma once

#include "tsmor/common.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace tsmor {

// Objective callback: returns the value and fills the gradient. A gradient
// vector of size zero signals a value-only request (line-search trials), so
// expensive callees can skip the gradient work.
using ObjectiveFn = std::function<double(const Vec&, Vec&)>;

struct BfgsOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-6;
  double armijo_c1 = 1e-4;
  double min_step = 1e-14;
  // stop after `flat_patience` consecutive relative decreases below f_tol_rel
  double f_tol_rel = 0.0;
  int flat_patience = 3;
};

struct BfgsResult {
  Vec x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_stalled = false;
};

// Quasi-Newton minimization with an inverse-Hessian BFGS update and a
// backtracking Armijo line search. Non-finite trial values shrink the step.
inline BfgsResult bfgs_minimize(const Vec& x0, const ObjectiveFn& fn,
                                const BfgsOptions& opt = {}) {
  const int n = static_cast<int>(x0.size());
  BfgsResult res;
  res.x = x0;
  Vec grad(n);
  res.value = fn(res.x, grad);
  if (!std::isfinite(res.value))
    throw NumericalError("bfgs_minimize: non-finite objective at the initial point");

  // gradient-scaled initial inverse Hessian keeps the first trial step O(1)
  // even when the start point is badly conditioned
  Mat H = Mat::Identity(n, n) / std::max(1.0, grad.norm());
  Vec x_new(n), grad_new(n);
  int flat_count_ = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.gradient_norm = grad.norm();
    if (res.gradient_norm <= opt.gradient_tol) {
      res.converged = true;
      return res;
    }
    Vec dir = -(H * grad);
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // reset on loss of descent direction
      H.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::quiet_NaN();
    bool accepted = false;
    Vec no_grad(0);
    while (step >= opt.min_step) {
      x_new = res.x + step * dir;
      f_new = fn(x_new, no_grad);
      if (std::isfinite(f_new) && f_new <= res.value + opt.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.line_search_stalled = true;
      return res;
    }
    grad_new.resize(n);
    fn(x_new, grad_new);

    if (opt.f_tol_rel > 0.0) {
      const double decrease = res.value - f_new;
      if (decrease <= opt.f_tol_rel * std::max(1.0, std::abs(res.value))) {
        if (++flat_count_ >= opt.flat_patience) {
          res.x = x_new;
          res.value = f_new;
          res.gradient_norm = grad_new.norm();
          res.iterations = it + 1;
          res.converged = true;
          return res;
        }
      } else {
        flat_count_ = 0;
      }
    }

    const Vec s = x_new - res.x;
    const Vec y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const Vec Hy = H * y;
      const double yHy = y.dot(Hy);
      H += (rho * rho * yHy + rho) * (s * s.transpose());
      H -= rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    res.x = x_new;
    res.value = f_new;
    grad = grad_new;
    res.iterations = it + 1;
  }
  res.gradient_norm = grad.norm();
  return res;
}

// Central-difference gradient helper (fallback path and test oracle).
inline Vec numerical_gradient(const Vec& x, const std::function<double(const Vec&)>& f,
                              double h = 1e-6) {
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace tsmor
