#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace sosest {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 500;
  /// Stop when ||g||_inf <= grad_tol * max(1, ||g0||_inf).
  double grad_tol = 1e-9;
  /// Stop when the objective decreased by less than f_tol * max(1, |f|) over `past` iterations.
  double f_tol = 1e-10;
  int past = 10;
  int max_linesearch = 40;
  double armijo = 1e-4;
  double wolfe = 0.9;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<TraceEntry> trace;  // entry 0 is the starting point
};

/// f(x, grad) returns the objective and writes the gradient.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with a bisection weak-Wolfe line search. Every accepted step
/// satisfies the Armijo condition, so the objective trace is non-increasing.
LbfgsResult minimize_lbfgs(const ObjectiveFn& f, Eigen::VectorXd x0, const LbfgsOptions& options);

}  // namespace sosest
