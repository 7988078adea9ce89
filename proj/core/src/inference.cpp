#include "plsim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plsim/chi2.hpp"
#include "plsim/errors.hpp"
#include "plsim/parametrization.hpp"
#include "plsim/profile_problem.hpp"

namespace plsim {

namespace {

double variance_of(const Vector& y) {
  if (y.size() < 2) return 1.0;
  return (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
}

Index numerical_rank(const Vector& singular_values, Index rows, Index cols) {
  if (singular_values.size() == 0) return 0;
  const double tol =
      static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * singular_values(0) * 16.0;
  Index r = 0;
  for (Index k = 0; k < singular_values.size(); ++k)
    if (singular_values(k) > tol) ++r;
  return r;
}

struct ConstraintGeometry {
  SphereChart chart;
  BetaMap beta_map;
};

// Splits A zeta = delta into beta = base + C alpha + N gamma (rows that involve
// beta) and A2 alpha = d2 (rows on alpha alone), then intersects the latter
// with the unit sphere.
ConstraintGeometry constraint_geometry(const LinearHypothesis& hyp, Index p, Index q) {
  const Index m = hyp.m();
  const Matrix aa = hyp.a_mat.leftCols(p);
  const Matrix ab = hyp.a_mat.rightCols(q);

  Index r = 0;
  Matrix u = Matrix::Identity(m, m);
  Matrix v = Matrix::Identity(q, q);
  Vector sv;
  if (q > 0) {
    Eigen::JacobiSVD<Matrix> svd(ab, Eigen::ComputeFullU | Eigen::ComputeFullV);
    sv = svd.singularValues();
    r = numerical_rank(sv, m, q);
    u = svd.matrixU();
    v = svd.matrixV();
  }
  const Matrix ur = u.leftCols(r);
  const Matrix uperp = u.rightCols(m - r);
  Matrix bplus = Matrix::Zero(q, m);
  if (r > 0) bplus = v.leftCols(r) * sv.head(r).cwiseInverse().asDiagonal() * ur.transpose();
  BetaMap beta_map{bplus * hyp.delta, -bplus * aa, v.rightCols(q - r)};

  const Index k = m - r;  // constraints on alpha alone
  if (k == 0) return {SphereChart::standard(p), std::move(beta_map)};
  const Matrix a2 = uperp.transpose() * aa;
  const Vector d2 = uperp.transpose() * hyp.delta;
  Eigen::JacobiSVD<Matrix> svd2(a2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index r2 = numerical_rank(svd2.singularValues(), k, p);
  if (r2 < k) throw Error(ErrorCode::RankDeficientA, "hypothesis matrix is rank deficient", {{"m", m}});
  const Vector offset = svd2.solve(d2);
  const double rad2 = 1.0 - offset.squaredNorm();
  if (rad2 < -1e-12) {
    throw Error(ErrorCode::InfeasibleConstraint, "the constraints on alpha do not meet the unit sphere",
                {{"offset_norm", offset.norm()}});
  }
  Matrix basis = svd2.matrixV().rightCols(p - k);
  double radius = std::sqrt(std::max(rad2, 0.0));
  if (rad2 <= 1e-12) {
    radius = 0.0;
    basis.resize(p, 0);
  }
  const double max_first = offset(0) + radius * (basis.cols() > 0 ? basis.row(0).norm() : 0.0);
  if (!(max_first > 0.0)) {
    throw Error(ErrorCode::InfeasibleConstraint, "no point with a positive first index coefficient satisfies H0",
                {{"max_alpha1", max_first}});
  }
  return {SphereChart(offset, radius, basis), std::move(beta_map)};
}

// Feasible point nearest to `alpha`, falling back to the one with the largest
// first coefficient.
Vector feasible_start(const SphereChart& chart, const Vector& alpha) {
  if (chart.sphere_dim() == 0) return chart.offset();
  const Matrix& b = chart.basis();
  Vector w = b.transpose() * (alpha - chart.offset());
  Vector cand;
  if (w.norm() > 1e-12) {
    cand = chart.offset() + chart.radius() * b * (w / w.norm());
    if (cand(0) > 0.0) return cand;
  }
  w = b.transpose() * Vector::Unit(alpha.size(), 0);
  return chart.offset() + chart.radius() * b * (w / w.norm());
}

BfgsOptions bfgs_options(const Dataset& data, const FitOptions& options) {
  BfgsOptions b;
  b.grad_tol = options.tol * static_cast<double>(data.n()) * std::max(variance_of(data.y()), 1e-300);
  b.step_tol = options.tol;
  b.max_iter = options.max_iter;
  return b;
}

}  // namespace

void LinearHypothesis::validate(Index p_plus_q) const {
  if (a_mat.cols() != p_plus_q || a_mat.rows() != delta.size() || a_mat.rows() == 0) {
    throw Error(ErrorCode::InvalidInput, "hypothesis shape does not match the model",
                {{"rows", a_mat.rows()}, {"cols", a_mat.cols()}, {"delta", delta.size()}, {"p_plus_q", p_plus_q}});
  }
  if (!a_mat.allFinite() || !delta.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "hypothesis entries must be finite");
  }
  Eigen::JacobiSVD<Matrix> svd(a_mat);
  if (a_mat.rows() > p_plus_q || numerical_rank(svd.singularValues(), a_mat.rows(), a_mat.cols()) < a_mat.rows()) {
    throw Error(ErrorCode::RankDeficientA, "hypothesis matrix must have full row rank", {{"m", a_mat.rows()}});
  }
}

LinearHypothesis coordinate_hypothesis(Index p_plus_q, const std::vector<Index>& coords, double value) {
  LinearHypothesis h{Matrix::Zero(static_cast<Index>(coords.size()), p_plus_q),
                     Vector::Constant(static_cast<Index>(coords.size()), value)};
  for (std::size_t r = 0; r < coords.size(); ++r) h.a_mat(static_cast<Index>(r), coords[r]) = 1.0;
  return h;
}

std::string to_string(TestMethod method) {
  switch (method) {
    case TestMethod::T1: return "t1";
    case TestMethod::Wald: return "wald";
    case TestMethod::T2: return "t2";
  }
  return "?";
}

TestMethod parse_test_method(const std::string& text) {
  if (text == "t1") return TestMethod::T1;
  if (text == "wald") return TestMethod::Wald;
  if (text == "t2") return TestMethod::T2;
  throw Error(ErrorCode::InvalidInput, "unknown test method '" + text + "'");
}

RkVariant parse_rk_variant(const std::string& text) {
  if (text == "printed") return RkVariant::Printed;
  if (text == "squared") return RkVariant::Squared;
  throw Error(ErrorCode::InvalidInput, "unknown r_K variant '" + text + "' (expected printed|squared)");
}

RestrictedFit fit_restricted(const Dataset& data, const LinearHypothesis& hyp, const ZetaParam& start, Bandwidth h,
                             const FitOptions& options) {
  const Index p = data.p();
  const Index q = data.q();
  hyp.validate(p + q);
  ConstraintGeometry geo = constraint_geometry(hyp, p, q);
  const SphereChart chart = geo.chart.recentred(feasible_start(geo.chart, start.alpha()));
  const ProfileProblem problem(data, h.h, options.kernel, chart, geo.beta_map);
  const BfgsResult opt = problem.minimize(Vector::Zero(chart.free_dim()), bfgs_options(data, options));
  const auto ev = problem.evaluate(opt.x, false);
  RestrictedFit out;
  out.zeta = ZetaParam(IndexParam::normalized(ev.alpha), ev.beta);
  out.q_value = ev.q;
  out.converged = opt.converged;
  out.iterations = opt.iterations;
  return out;
}

TestResult test_linear_t1(const Dataset& data, const LinearHypothesis& hyp, const PlsimFit& unrestricted,
                          const FitOptions& options) {
  const Index p = data.p();
  const Index q = data.q();
  hyp.validate(p + q);
  FitOptions opt = options;
  opt.kernel = unrestricted.kernel;
  const RestrictedFit restricted = fit_restricted(data, hyp, unrestricted.zeta_hat, unrestricted.h, opt);

  TestResult res;
  res.method = TestMethod::T1;
  res.bandwidth = unrestricted.h.h;
  res.kernel = unrestricted.kernel;
  res.n = data.n();
  res.zeta_alt = unrestricted.zeta_hat;
  double q1 = unrestricted.q_value;
  // The unrestricted fit can only do better; if it did not, restart it from
  // the restricted optimum.
  if (restricted.q_value < q1) {
    FitOptions again = opt;
    again.init = restricted.zeta;
    again.bandwidth = unrestricted.h;
    PlsimFit refit;
    try {
      refit = fit_plsim(data, again);
    } catch (const NoConvergenceError& e) {
      refit = e.best();
    }
    if (refit.q_value < q1) {
      q1 = refit.q_value;
      res.zeta_alt = refit.zeta_hat;
      res.warnings.push_back("unrestricted fit improved by restarting from the restricted optimum");
    }
  }
  if (!restricted.converged) res.warnings.push_back("restricted optimiser did not converge");
  res.rss_alt = q1;
  res.rss_null = restricted.q_value;
  res.zeta_null = restricted.zeta;
  const double n = static_cast<double>(data.n());
  res.statistic = std::max(0.0, n * (restricted.q_value - q1) / q1);
  res.df = static_cast<double>(hyp.m());
  res.p_value = chi2_sf(res.statistic, res.df);
  return res;
}

TestResult test_linear_t1(const Dataset& data, const LinearHypothesis& hyp, const FitOptions& options) {
  hyp.validate(data.p() + data.q());
  PlsimFit fit;
  try {
    fit = fit_plsim(data, options);
  } catch (const NoConvergenceError& e) {
    fit = e.best();
  }
  return test_linear_t1(data, hyp, fit, options);
}

TestResult test_linear_wald(const PlsimFit& fit, const LinearHypothesis& hyp) {
  const Index d = fit.zeta_hat.p() + fit.zeta_hat.q();
  hyp.validate(d);
  if (!fit.covariance_ok || !fit.cov.allFinite()) {
    throw Error(ErrorCode::SingularMiddleMatrix, "fit has no usable covariance matrix");
  }
  const Vector diff = hyp.a_mat * fit.zeta_hat.stacked() - hyp.delta;
  Matrix middle = hyp.a_mat * fit.cov * hyp.a_mat.transpose();
  middle = 0.5 * (middle + middle.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(middle);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * top)) {
    throw Error(ErrorCode::SingularMiddleMatrix,
                "A cov A' is singular; the hypothesis loads on the structural null direction of alpha",
                {{"min_eigenvalue", eig.eigenvalues().minCoeff()}});
  }
  const Vector coord = eig.eigenvectors().transpose() * diff;
  TestResult res;
  res.method = TestMethod::Wald;
  res.statistic = (coord.array().square() / eig.eigenvalues().array()).sum();
  res.df = static_cast<double>(hyp.m());
  res.p_value = chi2_sf(res.statistic, res.df);
  res.bandwidth = fit.h.h;
  res.kernel = fit.kernel;
  res.n = fit.n;
  res.zeta_alt = fit.zeta_hat;
  return res;
}

KernelConstants kernel_constants(const Kernel& kernel, RkVariant variant) {
  KernelConstants c;
  c.k0 = kernel.at_zero();
  c.ik2 = integrate([&](double u) { return kernel(u) * kernel(u); }, -1.0, 1.0);
  const double numerator = c.k0 - 0.5 * c.ik2;
  if (variant == RkVariant::Printed) {
    c.r_k = 2.0 * numerator;
  } else {
    auto g = [&](double u) {
      const double v = kernel(u) - 0.5 * kernel_self_convolution(kernel, u);
      return v * v;
    };
    // K*K is smooth except at 0 and +-1, +-2; split there for the quadrature.
    double denom = 0.0;
    const double cuts[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    for (int k = 0; k < 4; ++k) denom += integrate(g, cuts[k], cuts[k + 1], 1e-12);
    c.r_k = numerator / denom;
  }
  return c;
}

TestResult test_link_t2(const Dataset& data, const PlsimFit& fit, RkVariant variant) {
  const Index n = data.n();
  const Vector lambda = data.z() * fit.zeta_hat.alpha();
  std::vector<double> sorted(lambda.data(), lambda.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < 3) {
    throw Error(ErrorCode::DegenerateIndex, "fitted index needs at least 3 distinct values",
                {{"distinct", static_cast<long>(distinct)}});
  }
  const Vector ystar = data.y() - data.x() * fit.zeta_hat.beta();
  const IndexSmoother smoother(lambda, fit.h.h, fit.kernel);
  const double rss1 = (ystar - smoother.level(ystar)).squaredNorm();
  Matrix design(n, 2);
  design.col(0).setOnes();
  design.col(1) = lambda;
  const Vector theta = design.colPivHouseholderQr().solve(ystar);
  const double rss0 = (ystar - design * theta).squaredNorm();

  const KernelConstants kc = kernel_constants(fit.kernel, variant);
  TestResult res;
  res.method = TestMethod::T2;
  res.n = n;
  res.bandwidth = fit.h.h;
  res.kernel = fit.kernel;
  res.rss_null = rss0;
  res.rss_alt = rss1;
  res.zeta_alt = fit.zeta_hat;
  const double raw = 0.5 * kc.r_k * static_cast<double>(n) * (rss0 - rss1) / rss1;
  if (raw < 0.0) {
    res.warnings.push_back("negative T2 (" + std::to_string(raw) + ") reported as 0");
    if (raw < -1e-6 * static_cast<double>(n)) res.warnings.push_back("T2 below the numerical floor");
  }
  res.statistic = std::max(raw, 0.0);
  const double range = lambda.maxCoeff() - lambda.minCoeff();
  res.df = kc.r_k * range * (kc.k0 - 0.5 * kc.ik2) / fit.h.h;
  res.p_value = chi2_sf(res.statistic, res.df);
  return res;
}

TestResult test_link_t2(const Dataset& data, const FitOptions& options, RkVariant variant) {
  PlsimFit fit;
  try {
    fit = fit_plsim(data, options);
  } catch (const NoConvergenceError& e) {
    fit = e.best();
  }
  return test_link_t2(data, fit, variant);
}

double t1_noncentrality(const LinearHypothesis& hyp, const ZetaParam& zeta_true, const Matrix& dhat, double sigma2,
                        Index n) {
  const Index d = zeta_true.p() + zeta_true.q();
  hyp.validate(d);
  const Covariance dplus = standard_errors(dhat, 1.0, 1, &zeta_true.alpha());
  Matrix middle = hyp.a_mat * dplus.cov * hyp.a_mat.transpose();
  middle = 0.5 * (middle + middle.transpose());
  Eigen::LDLT<Matrix> ldlt(middle);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw Error(ErrorCode::SingularMiddleMatrix, "A D^+ A' is singular");
  }
  const Vector diff = hyp.a_mat * zeta_true.stacked() - hyp.delta;
  return static_cast<double>(n) / sigma2 * diff.dot(ldlt.solve(diff));
}

double theoretical_power_t1(const LinearHypothesis& hyp, const ZetaParam& zeta_true, const Matrix& dhat,
                            double sigma2, Index n, double level) {
  const double phi = t1_noncentrality(hyp, zeta_true, dhat, sigma2, n);
  const double m = static_cast<double>(hyp.m());
  const double crit = chi2_quantile(1.0 - level, m);
  return chi2_sf(crit, m, phi);
}

}  // namespace plsim
