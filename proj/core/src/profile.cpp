#include "plsim/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace plsim {

namespace {

double sample_variance(const Vector& y) {
  const double n = static_cast<double>(y.size());
  if (y.size() < 2) return 1.0;
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / (n - 1.0);
}

/// Chart jacobian of the standard delete-first chart at alpha.
Matrix standard_jacobian(const Vector& alpha) {
  const Index p = alpha.size();
  Matrix jac = Matrix::Zero(p, p - 1);
  if (p > 1) {
    jac.row(0) = -alpha.tail(p - 1).transpose() / alpha(0);
    jac.bottomRows(p - 1).setIdentity();
  }
  return jac;
}

struct Pieces {
  Vector ystar;
  Vector residual;
  Matrix xtilde;
};

Pieces residual_pieces(const IndexSmoother& smoother, const ZetaParam& zeta, const Dataset& data) {
  Pieces out;
  out.ystar = data.y() - data.x() * zeta.beta();
  out.residual = out.ystar - smoother.level(out.ystar);
  out.xtilde = data.x() - smoother.level(data.x());
  return out;
}

void check_shapes(const ZetaParam& zeta, const Dataset& data) {
  if (zeta.p() != data.p() || zeta.q() != data.q()) {
    throw Error(ErrorCode::InvalidInput, "parameter dimensions do not match the dataset",
                {{"p", data.p()}, {"q", data.q()}});
  }
}

PlsimFit assemble(const Dataset& data, const ProfileProblem& problem, const BfgsResult& opt, Bandwidth h,
                  const Kernel& kernel) {
  const auto ev = problem.evaluate(opt.x, false);
  PlsimFit fit;
  fit.zeta_hat = ZetaParam(IndexParam::normalized(ev.alpha), ev.beta);
  fit.h = h;
  fit.kernel = kernel;
  fit.n = data.n();
  fit.q_value = ev.q;
  fit.sigma2_hat = ev.q / static_cast<double>(data.n());
  fit.iterations = opt.iterations;
  fit.converged = opt.converged;
  fit.objective_trace = opt.trace;
  fit.gradient_norm = 0.0;
  const Vector grad = profile_gradient(fit.zeta_hat, data, h, kernel);
  if (grad.size() > 0) fit.gradient_norm = grad.cwiseAbs().maxCoeff();
  fit.dhat = estimate_dhat(fit.zeta_hat, data, h, kernel);
  try {
    const Covariance c = standard_errors(fit.dhat, fit.sigma2_hat, data.n(), &fit.zeta_hat.alpha());
    fit.cov = c.cov;
    fit.se = c.se;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularCovariance) throw;
    const Index d = data.p() + data.q();
    fit.covariance_ok = false;
    fit.cov = Matrix::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
    fit.se = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  }
  fit.eta_curve = link_curve(fit.zeta_hat, data, h, kernel, fit.sigma2_hat);
  return fit;
}

}  // namespace

NoConvergenceError::NoConvergenceError(PlsimFit best, int max_iter)
    : Error(ErrorCode::NoConvergence, "optimizer did not converge in " + std::to_string(max_iter) + " iterations",
            {{"max_iter", max_iter}, {"gradient_norm", best.gradient_norm}}),
      best_(std::move(best)) {}

double profile_objective(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel) {
  check_shapes(zeta, data);
  const IndexSmoother smoother(data.z() * zeta.alpha(), h.h, kernel);
  const Vector ystar = data.y() - data.x() * zeta.beta();
  return (ystar - smoother.level(ystar)).squaredNorm();
}

Vector profile_gradient(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel,
                        GradientMode mode) {
  check_shapes(zeta, data);
  const Index p = data.p();
  const Index q = data.q();
  Vector grad(p - 1 + q);
  if (mode == GradientMode::FiniteDifference) {
    const Vector chart = zeta.index.chart();
    for (Index k = 0; k < p - 1 + q; ++k) {
      Vector c_plus = chart, c_minus = chart;
      Vector b_plus = zeta.beta(), b_minus = zeta.beta();
      double step = 0.0;
      if (k < p - 1) {
        step = 1e-6 * std::max(1.0, std::abs(chart(k)));
        c_plus(k) += step;
        c_minus(k) -= step;
      } else {
        step = 1e-6 * std::max(1.0, std::abs(zeta.beta()(k - (p - 1))));
        b_plus(k - (p - 1)) += step;
        b_minus(k - (p - 1)) -= step;
      }
      const double fp = profile_objective(ZetaParam(IndexParam::from_chart(c_plus), b_plus), data, h, kernel);
      const double fm = profile_objective(ZetaParam(IndexParam::from_chart(c_minus), b_minus), data, h, kernel);
      grad(k) = (fp - fm) / (2.0 * step);
    }
    return grad;
  }
  const IndexSmoother smoother(data.z() * zeta.alpha(), h.h, kernel);
  const Pieces pieces = residual_pieces(smoother, zeta, data);
  Vector g_alpha;
  if (mode == GradientMode::Exact) {
    g_alpha = -2.0 * smoother.index_derivative(pieces.ystar, pieces.residual, data.z());
  } else {
    const Vector slope = smoother.slope(pieces.ystar);
    const Matrix ztilde = data.z() - smoother.level(data.z());
    g_alpha = -2.0 * (ztilde.transpose() * pieces.residual.cwiseProduct(slope));
  }
  grad.head(p - 1) = standard_jacobian(zeta.alpha()).transpose() * g_alpha;
  grad.tail(q) = -2.0 * (pieces.xtilde.transpose() * pieces.residual);
  return grad;
}

Vector efficient_score(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel) {
  return -0.5 * profile_gradient(zeta, data, h, kernel, GradientMode::PlugIn);
}

ZetaParam auto_initial(const Dataset& data, const Kernel& kernel) {
  const Index n = data.n();
  const Index p = data.p();
  const Index q = data.q();
  Matrix design(n, 1 + p + q);
  design.col(0).setOnes();
  design.middleCols(1, p) = data.z();
  design.rightCols(q) = data.x();
  const Vector coef = design.colPivHouseholderQr().solve(data.y());
  const IndexParam ols = IndexParam::normalized(coef.segment(1, p));
  if (p == 1) return ZetaParam(ols, coef.tail(q));

  std::vector<Vector> candidates{ols.alpha()};
  if (p == 2) {
    constexpr int kAngles = 16;
    for (int k = 0; k < kAngles; ++k) {
      const double theta = -std::numbers::pi / 2 + std::numbers::pi * (k + 0.5) / kAngles;
      Vector a(2);
      a << std::cos(theta), std::sin(theta);
      candidates.push_back(a);
    }
  } else {
    candidates.push_back(Vector::Unit(p, 0));
    for (Index j = 1; j < p; ++j) {
      candidates.push_back((Vector::Unit(p, 0) + Vector::Unit(p, j)) / std::sqrt(2.0));
      candidates.push_back((Vector::Unit(p, 0) - Vector::Unit(p, j)) / std::sqrt(2.0));
    }
  }

  const SphereChart chart = SphereChart::standard(p);
  double best_q = std::numeric_limits<double>::infinity();
  ZetaParam best(ols, coef.tail(q));
  for (const Vector& cand : candidates) {
    const IndexParam index = IndexParam::normalized(cand);
    const Vector lambda = data.z() * index.alpha();
    const double range = lambda.maxCoeff() - lambda.minCoeff();
    if (!(range > 0.0)) continue;
    const ProfileProblem problem(data, 0.2 * range, kernel, chart, BetaMap::identity(p, q));
    try {
      const auto ev = problem.evaluate(index.chart(), false);
      if (ev.q < best_q) {
        best_q = ev.q;
        best = ZetaParam(index, ev.beta);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateNeighborhood) throw;
    }
  }
  return best;
}

PlsimFit fit_plsim(const Dataset& data, const FitOptions& options) {
  data.require_fit_size();
  const Index p = data.p();
  const Index q = data.q();
  const ZetaParam init = options.init ? *options.init : auto_initial(data, options.kernel);
  check_shapes(init, data);

  const bool use_cv = !options.bandwidth.has_value();
  auto select_h = [&](const ZetaParam& z) {
    if (options.bandwidth_grid.empty()) return cv_bandwidth(data, z, options.kernel);
    std::vector<Bandwidth> grid;
    for (double g : options.bandwidth_grid) grid.push_back(Bandwidth::fixed(g));
    return cv_bandwidth(data, z, grid, options.kernel);
  };
  Bandwidth h = use_cv ? select_h(init) : *options.bandwidth;

  BfgsOptions bopt;
  bopt.grad_tol = options.tol * static_cast<double>(data.n()) * std::max(sample_variance(data.y()), 1e-300);
  bopt.step_tol = options.tol;
  bopt.max_iter = options.max_iter;

  const SphereChart chart = SphereChart::standard(p);
  const BetaMap beta_map = BetaMap::identity(p, q);
  std::optional<ProfileProblem> problem;
  problem.emplace(data, h.h, options.kernel, chart, beta_map);
  BfgsResult opt = problem->minimize(init.index.chart(), bopt, options.gradient);
  bool refit = false;
  if (use_cv) {
    const auto ev = problem->evaluate(opt.x, false);
    const ZetaParam current(IndexParam::normalized(ev.alpha), ev.beta);
    const Bandwidth h2 = select_h(current);
    if (std::abs(h2.h - h.h) > 0.2 * h.h) {
      h = h2;
      refit = true;
      problem.emplace(data, h.h, options.kernel, chart, beta_map);
      opt = problem->minimize(current.index.chart(), bopt, options.gradient);
    }
  }

  PlsimFit fit = assemble(data, *problem, opt, h, options.kernel);
  fit.bandwidth_refit = refit;
  if (!fit.converged) throw NoConvergenceError(std::move(fit), options.max_iter);
  return fit;
}

Matrix estimate_dhat(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel) {
  check_shapes(zeta, data);
  const Index n = data.n();
  const Index p = data.p();
  const Index q = data.q();
  const IndexSmoother smoother(data.z() * zeta.alpha(), h.h, kernel);
  const Vector ystar = data.y() - data.x() * zeta.beta();
  const Vector slope = smoother.slope(ystar);
  Matrix v(n, p + q);
  v.leftCols(p) = slope.asDiagonal() * (data.z() - smoother.level(data.z()));
  if (q > 0) v.rightCols(q) = data.x() - smoother.level(data.x());
  Matrix d = v.transpose() * v / static_cast<double>(n);
  return 0.5 * (d + d.transpose());
}

Covariance standard_errors(const Matrix& dhat, double sigma2, Index n, const Vector* alpha) {
  const Index dim = dhat.rows();
  if (dhat.cols() != dim) throw Error(ErrorCode::InvalidInput, "D-hat must be square");
  Matrix d = 0.5 * (dhat + dhat.transpose());
  Matrix proj = Matrix::Identity(dim, dim);
  if (alpha != nullptr) {
    const Index p = alpha->size();
    proj.topLeftCorner(p, p) -= (*alpha) * alpha->transpose() / alpha->squaredNorm();
    d = proj * d * proj;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(d);
  const Vector& ev = eig.eigenvalues();
  const double top = ev.size() > 0 ? ev.maxCoeff() : 0.0;
  Vector inv = Vector::Zero(dim);
  Index rank = 0;
  for (Index k = 0; k < dim; ++k) {
    if (top > 0.0 && ev(k) > 1e-10 * top) {
      inv(k) = 1.0 / ev(k);
      ++rank;
    }
  }
  if (rank < dim - 1) {
    throw Error(ErrorCode::SingularCovariance, "D-hat is rank deficient beyond the structural null direction",
                {{"rank", rank}, {"dim", dim}});
  }
  Covariance out;
  out.cov = sigma2 / static_cast<double>(n) * (eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose());
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.se = out.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

std::vector<EtaSample> link_curve(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel,
                                  double sigma2, int points) {
  const Vector lambda = data.z() * zeta.alpha();
  const Vector ystar = data.y() - data.x() * zeta.beta();
  const double lo = lambda.minCoeff();
  const double hi = lambda.maxCoeff();
  const double ik2 = integrate([&](double u) { return kernel(u) * kernel(u); }, -1.0, 1.0);
  std::vector<EtaSample> curve;
  for (int k = 0; k < points; ++k) {
    const double u = points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
    try {
      const LocalFit fit = local_linear_fit(u, lambda, ystar, h, kernel);
      double density = 0.0;
      for (Index i = 0; i < lambda.size(); ++i) density += kernel((lambda(i) - u) / h.h) / h.h;
      density /= static_cast<double>(lambda.size());
      curve.push_back({u, fit.a_hat, fit.b_hat, sigma2 * ik2 / density});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateNeighborhood) throw;
    }
  }
  return curve;
}

}  // namespace plsim
