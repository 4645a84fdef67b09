#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "matchlab/error.hpp"

namespace matchlab::optim {

/// Objective callback: returns f(x) and, when grad is non-null, writes the
/// gradient (same length as x) into *grad.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct DescentConfig {
  double step_size = 1.0;       // initial and maximum trial step
  int max_iters = 1000;
  double grad_tolerance = 1e-8;
  double armijo = 1e-4;         // sufficient-decrease constant
  double min_step = 1e-20;      // line search gives up below this
  ErrorCode nonfinite_code = ErrorCode::NonFiniteObjective;
};

struct DescentResult {
  Eigen::VectorXd x;
  std::vector<double> trace;  // objective at x0 and after every accepted step
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;  // gradient norm reached tolerance
  bool stalled = false;    // line search could not find a decrease
};

/// Gradient descent with backtracking (Armijo) line search. The step is
/// halved until the sufficient-decrease condition holds, then allowed to
/// double again (capped at step_size) on the next iteration. Every accepted
/// step strictly decreases f, so the trace is nonincreasing.
DescentResult gradient_descent(const Objective& f, Eigen::VectorXd x0, const DescentConfig& cfg);

/// Central finite-difference gradient; test and diagnostic helper.
Eigen::VectorXd finite_difference_gradient(const Objective& f, const Eigen::VectorXd& x,
                                           double h = 1e-6);

}  // namespace matchlab::optim
