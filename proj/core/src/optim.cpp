#include "matchlab/optim.hpp"

#include <cmath>
#include <string>

namespace matchlab::optim {

DescentResult gradient_descent(const Objective& f, Eigen::VectorXd x0, const DescentConfig& cfg) {
  if (cfg.step_size <= 0.0 || cfg.max_iters < 1 || cfg.grad_tolerance < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "descent config requires step_size > 0, max_iters >= 1");
  }
  DescentResult out;
  out.x = std::move(x0);
  Eigen::VectorXd grad(out.x.size());
  double value = f(out.x, &grad);
  if (!std::isfinite(value) || !grad.allFinite()) {
    throw Error(cfg.nonfinite_code, "objective is not finite at the starting point");
  }
  out.trace.push_back(value);

  double step = cfg.step_size;
  Eigen::VectorXd trial(out.x.size());
  Eigen::VectorXd trial_grad(out.x.size());
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double gnorm2 = grad.squaredNorm();
    out.grad_norm = std::sqrt(gnorm2);
    if (out.grad_norm <= cfg.grad_tolerance) {
      out.converged = true;
      return out;
    }
    bool accepted = false;
    while (step >= cfg.min_step) {
      trial = out.x - step * grad;
      const double trial_value = f(trial, nullptr);
      if (std::isfinite(trial_value) && trial_value <= value - cfg.armijo * step * gnorm2 &&
          trial_value < value) {
        accepted = true;
        value = trial_value;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.stalled = true;
      return out;
    }
    out.x.swap(trial);
    value = f(out.x, &grad);
    if (!std::isfinite(value) || !grad.allFinite()) {
      throw Error(cfg.nonfinite_code, "objective became non-finite at iteration " + std::to_string(it));
    }
    out.trace.push_back(value);
    out.iterations = it + 1;
    step = std::min(2.0 * step, cfg.step_size);
  }
  out.grad_norm = grad.norm();
  out.converged = out.grad_norm <= cfg.grad_tolerance;
  return out;
}

Eigen::VectorXd finite_difference_gradient(const Objective& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    probe[i] = xi + h;
    const double up = f(probe, nullptr);
    probe[i] = xi - h;
    const double down = f(probe, nullptr);
    probe[i] = xi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace matchlab::optim
