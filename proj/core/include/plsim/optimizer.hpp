#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "plsim/common.hpp"

namespace plsim {

struct BfgsOptions {
  /// Converged when |grad|_inf <= grad_tol ...
  double grad_tol = 1e-8;
  /// ... or when an accepted quasi-Newton step has norm < step_tol * (1 + |x|).
  double step_tol = 1e-10;
  int max_iter = 200;
  /// Iterates are kept inside the ball |x| <= max_norm by shrinking steps.
  /// Non-positive disables the constraint.
  double max_norm = 0.999;
  /// Largest initial step in max-norm.
  double max_step = 0.25;
};

struct BfgsResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  int iterations = 0;
  bool converged = false;
  /// Objective value at every accepted iterate, starting with x0.
  std::vector<double> trace;
};

/// Objective returning f(x) and writing the gradient when `grad` is non-null.
/// Returning a non-finite value marks x as infeasible; the line search backs off.
using Objective = std::function<double(const Vector& x, Vector* grad)>;

/// Damped BFGS with Armijo backtracking. `initial_inverse_hessian`, when
/// given, seeds the inverse Hessian (e.g. a Gauss-Newton approximation).
BfgsResult minimize_bfgs(const Objective& f, const Vector& x0, const BfgsOptions& options,
                         const std::optional<Matrix>& initial_inverse_hessian = std::nullopt);

}  // namespace plsim
