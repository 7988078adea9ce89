#include "plsim/profile_problem.hpp"

#include <cmath>
#include <limits>

#include "plsim/errors.hpp"

namespace plsim {

ProfileProblem::ProfileProblem(const Dataset& data, double h, Kernel kernel, SphereChart chart, BetaMap beta_map,
                               QuadraticPenalty penalty)
    : data_(data),
      h_(h),
      kernel_(kernel),
      chart_(std::move(chart)),
      beta_map_(std::move(beta_map)),
      penalty_(std::move(penalty)) {
  yx_.resize(data.n(), 1 + data.q());
  yx_.col(0) = data.y();
  yx_.rightCols(data.q()) = data.x();
}

double ProfileProblem::penalty_value(const Vector& alpha, const Vector& beta) const {
  const double n = static_cast<double>(data_.n());
  double pen = 0.0;
  if (penalty_.alpha.size() > 0) pen += n * penalty_.alpha.dot(alpha.cwiseAbs2());
  if (penalty_.beta.size() > 0) pen += n * penalty_.beta.dot(beta.cwiseAbs2());
  return pen;
}

ProfileProblem::Inner ProfileProblem::solve_beta(const IndexSmoother& smoother, const Vector& alpha) const {
  const Index q = data_.q();
  const Matrix smoothed = smoother.level(yx_);
  Inner inner;
  const Vector ytilde = data_.y() - smoothed.col(0);
  inner.xtilde = data_.x() - smoothed.rightCols(q);

  const Vector fixed = beta_map_.base + beta_map_.coupling * alpha;
  const Vector target = ytilde - inner.xtilde * fixed;
  const Index g = beta_map_.free_dim();
  Vector gamma = Vector::Zero(g);
  if (g > 0) {
    const Matrix design = inner.xtilde * beta_map_.null_basis;
    Matrix normal = design.transpose() * design;
    Vector rhs = design.transpose() * target;
    if (penalty_.beta.size() > 0) {
      const double n = static_cast<double>(data_.n());
      const Matrix wn = beta_map_.null_basis.transpose() * penalty_.beta.asDiagonal();
      normal += n * wn * beta_map_.null_basis;
      rhs -= n * wn * fixed;
    }
    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() == Eigen::Success) {
      gamma = llt.solve(rhs);
    } else {
      gamma = normal.completeOrthogonalDecomposition().solve(rhs);
    }
  }
  inner.beta = fixed + beta_map_.null_basis * gamma;
  inner.residual = ytilde - inner.xtilde * inner.beta;
  inner.q = inner.residual.squaredNorm();
  return inner;
}

ProfileProblem::Evaluation ProfileProblem::evaluate(const Vector& v, bool with_gradient, GradientMode mode) const {
  Evaluation ev;
  ev.alpha = chart_.alpha(v);
  const IndexSmoother smoother(data_.z() * ev.alpha, h_, kernel_);
  Inner inner = solve_beta(smoother, ev.alpha);
  ev.beta = inner.beta;
  ev.q = inner.q;
  ev.objective = inner.q + penalty_value(ev.alpha, ev.beta);
  if (!with_gradient) return ev;

  const Index dim = chart_.free_dim();
  if (mode == GradientMode::FiniteDifference) {
    ev.grad.resize(dim);
    for (Index k = 0; k < dim; ++k) {
      const double step = 1e-6 * std::max(1.0, std::abs(v(k)));
      Vector vp = v, vm = v;
      vp(k) += step;
      vm(k) -= step;
      ev.grad(k) = (evaluate(vp, false).objective - evaluate(vm, false).objective) / (2.0 * step);
    }
    return ev;
  }

  const double n = static_cast<double>(data_.n());
  const Vector ystar = data_.y() - data_.x() * ev.beta;
  Vector g_alpha;
  if (mode == GradientMode::Exact) {
    g_alpha = -2.0 * smoother.index_derivative(ystar, inner.residual, data_.z());
  } else {
    const Vector slope = smoother.slope(ystar);
    const Matrix ztilde = data_.z() - smoother.level(data_.z());
    g_alpha = -2.0 * (ztilde.transpose() * inner.residual.cwiseProduct(slope));
  }
  Vector dq_dbeta = -2.0 * (inner.xtilde.transpose() * inner.residual);
  if (penalty_.beta.size() > 0) dq_dbeta += 2.0 * n * penalty_.beta.cwiseProduct(ev.beta);
  g_alpha += beta_map_.coupling.transpose() * dq_dbeta;
  if (penalty_.alpha.size() > 0) g_alpha += 2.0 * n * penalty_.alpha.cwiseProduct(ev.alpha);
  ev.grad = chart_.jacobian(v).transpose() * g_alpha;
  return ev;
}

double ProfileProblem::objective(const Vector& v, Vector* grad, GradientMode mode) const {
  try {
    Evaluation ev = evaluate(v, grad != nullptr, mode);
    if (grad != nullptr) *grad = std::move(ev.grad);
    return ev.objective;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateNeighborhood || e.code() == ErrorCode::ChartOutOfBall) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

std::optional<Matrix> ProfileProblem::gauss_newton_inverse(const Vector& v) const {
  const Index dim = chart_.free_dim();
  if (dim == 0) return std::nullopt;
  try {
    const double n = static_cast<double>(data_.n());
    const Vector alpha = chart_.alpha(v);
    const IndexSmoother smoother(data_.z() * alpha, h_, kernel_);
    Inner inner = solve_beta(smoother, alpha);
    const Vector ystar = data_.y() - data_.x() * inner.beta;
    const Vector slope = smoother.slope(ystar);
    const Matrix ztilde = data_.z() - smoother.level(data_.z());
    const Matrix jac = chart_.jacobian(v);
    // d residual / d v ~ -(eta' Ztilde + Xtilde C) J ; d residual / d gamma = -Xtilde N.
    const Matrix a = (slope.asDiagonal() * ztilde + inner.xtilde * beta_map_.coupling) * jac;
    Matrix hvv = 2.0 * a.transpose() * a;
    if (penalty_.alpha.size() > 0) hvv += 2.0 * n * jac.transpose() * penalty_.alpha.asDiagonal() * jac;
    const Index g = beta_map_.free_dim();
    if (g > 0) {
      const Matrix b = inner.xtilde * beta_map_.null_basis;
      Matrix hgg = 2.0 * b.transpose() * b;
      if (penalty_.beta.size() > 0) {
        hgg += 2.0 * n * beta_map_.null_basis.transpose() * penalty_.beta.asDiagonal() * beta_map_.null_basis;
      }
      const Matrix hvg = 2.0 * a.transpose() * b;
      Eigen::LLT<Matrix> llt(hgg);
      if (llt.info() == Eigen::Success) hvv -= hvg * llt.solve(hvg.transpose());
    }
    hvv = 0.5 * (hvv + hvv.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hvv);
    if (eig.info() != Eigen::Success) return std::nullopt;
    const double top = eig.eigenvalues().maxCoeff();
    if (!(top > 0.0) || !std::isfinite(top)) return std::nullopt;
    const Vector clamped = eig.eigenvalues().cwiseMax(1e-8 * top);
    return Matrix(eig.eigenvectors() * clamped.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose());
  } catch (const Error&) {
    return std::nullopt;
  }
}

BfgsResult ProfileProblem::minimize(const Vector& v0, const BfgsOptions& options, GradientMode mode) const {
  const auto f = [this, mode](const Vector& v, Vector* grad) { return objective(v, grad, mode); };
  return minimize_bfgs(f, v0, options, gauss_newton_inverse(v0));
}

}  // namespace plsim
