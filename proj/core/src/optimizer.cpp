#include "plsim/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "plsim/errors.hpp"

namespace plsim {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

BfgsResult minimize_bfgs(const Objective& f, const Vector& x0, const BfgsOptions& options,
                         const std::optional<Matrix>& initial_inverse_hessian) {
  const Index dim = x0.size();
  BfgsResult result;
  result.x = x0;
  result.grad = Vector::Zero(dim);
  result.f = f(result.x, &result.grad);
  if (!std::isfinite(result.f)) {
    throw Error(ErrorCode::InvalidInput, "objective is not finite at the starting point");
  }
  result.trace.push_back(result.f);
  if (dim == 0 || inf_norm(result.grad) <= options.grad_tol) {
    result.converged = true;
    return result;
  }

  const bool seeded = initial_inverse_hessian.has_value();
  Matrix hinv = seeded ? *initial_inverse_hessian : Matrix::Identity(dim, dim);
  bool scaled = seeded;
  Vector trial_grad(dim);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter + 1;
    Vector dir = -(hinv * result.grad);
    double slope = result.grad.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      dir = -result.grad;
      slope = result.grad.dot(dir);
    }
    if (!scaled) {
      const double m = inf_norm(dir);
      if (m > options.max_step) {
        dir *= options.max_step / m;
        slope = result.grad.dot(dir);
      }
    }

    double t = 1.0;
    if (options.max_norm > 0.0) {
      for (int k = 0; k < 60 && (result.x + t * dir).norm() > options.max_norm; ++k) t *= 0.5;
    }

    bool accepted = false;
    double f_new = 0.0;
    Vector x_new;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      x_new = result.x + t * dir;
      f_new = f(x_new, &trial_grad);
      if (std::isfinite(f_new) && f_new <= result.f + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }

    if (!accepted) {
      if (hinv.isIdentity() && !scaled) break;  // steepest descent failed too
      hinv.setIdentity();
      scaled = false;
      continue;
    }

    const Vector s = x_new - result.x;
    const Vector y = trial_grad - result.grad;
    result.x = x_new;
    result.f = f_new;
    result.grad = trial_grad;
    result.trace.push_back(f_new);

    if (inf_norm(result.grad) <= options.grad_tol) {
      result.converged = true;
      break;
    }
    if (s.norm() < options.step_tol * (1.0 + result.x.norm())) {
      result.converged = true;
      break;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = Matrix::Identity(dim, dim) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector hy = hinv * y;
      hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  return result;
}

}  // namespace plsim
