#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "plsim/designs.hpp"
#include "plsim/errors.hpp"
#include "plsim/profile.hpp"
#include "plsim/rng.hpp"

using namespace plsim;

namespace {

struct Instance {
  Dataset data;
  ZetaParam zeta;
};

// Sin-link PLSIM with random dimensions and a random evaluation point.
Instance random_instance(std::uint64_t seed, Index n, Index p, Index q) {
  RandomStream rng(seed, 0);
  Matrix z(n, p), x(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(i, j) = rng.uniform();
    for (Index k = 0; k < q; ++k) x(i, k) = rng.normal();
  }
  Vector alpha = Vector::Ones(p) / std::sqrt(double(p));
  Vector beta = Vector::LinSpaced(q, 0.5, -0.5);
  Vector y = x * beta;
  const Vector idx = z * alpha;
  for (Index i = 0; i < n; ++i) y(i) += std::sin(3.0 * idx(i)) + 0.1 * rng.normal();
  Vector dir(p);
  for (Index j = 0; j < p; ++j) dir(j) = alpha(j) + 0.3 * rng.normal();
  dir(0) = std::abs(dir(0)) + 0.2;
  Vector b(q);
  for (Index k = 0; k < q; ++k) b(k) = beta(k) + 0.2 * rng.normal();
  return {Dataset(y, z, x), ZetaParam(IndexParam::normalized(dir), b)};
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("objective vanishes for a constant link with known beta") {
  RandomStream rng(20, 0);
  const Index n = 100;
  Matrix z(n, 2), x(n, 2);
  for (Index i = 0; i < n; ++i) {
    z.row(i) << rng.uniform(), rng.uniform();
    x.row(i) << rng.normal(), rng.normal();
  }
  Vector beta(2);
  beta << 1.5, -2.0;
  const Vector y = (x * beta).array() + 3.0;
  const Dataset data(y, z, x);
  const ZetaParam zeta(IndexParam::normalized(Vector::Ones(2)), beta);
  const double q = profile_objective(zeta, data, Bandwidth::fixed(0.3), Kernel());
  CHECK(q < 1e-16 * n * 10.0);
}

TEST_CASE("beta perturbation adds the smoothed-covariate quadratic") {
  const Instance inst = random_instance(21, 150, 2, 2);
  const Bandwidth h = Bandwidth::fixed(0.25);
  const Kernel tri;
  // Exact quadratic in beta: Q(beta + d e1) = Q + 2 d g + d^2 s.
  const IndexSmoother smoother(inst.data.z() * inst.zeta.alpha(), h.h, tri);
  const Matrix xtilde = inst.data.x() - smoother.level(inst.data.x());
  const double s = xtilde.col(0).squaredNorm();
  const double q0 = profile_objective(inst.zeta, inst.data, h, tri);
  const double g = 0.5 * profile_gradient(inst.zeta, inst.data, h, tri)(1);
  for (double delta : {1e-3, 1e-4}) {
    Vector b = inst.zeta.beta();
    b(0) += delta;
    const double q1 = profile_objective(ZetaParam(inst.zeta.index, b), inst.data, h, tri);
    CHECK(relative_gap(q1 - q0 - 2 * delta * g, s * delta * delta) < 1e-4);
  }
}

TEST_CASE("model 4.1 at the truth: Q/n near the noise variance") {
  const SimSample s = gen_model41(200, 41);
  const ZetaParam truth(IndexParam::from_alpha(s.alpha), Vector(0));
  const Bandwidth h = cv_bandwidth(s.data, truth, Kernel());
  const double q = profile_objective(truth, s.data, h, Kernel());
  CHECK(std::abs(q / 200.0 - 0.04) < 0.25 * 0.04);
}

TEST_CASE("exact gradient matches central differences") {
  const Kernel tri;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index p = 2 + seed % 4;
    const Index q = seed % 3;
    const Instance inst = random_instance(100 + seed, 100, p, q);
    const Bandwidth h = Bandwidth::fixed(0.3);
    const Vector g = profile_gradient(inst.zeta, inst.data, h, tri);
    // Central differences with step 1e-5 in the (chart, beta) coordinates.
    const Vector chart = inst.zeta.index.chart();
    for (Index k = 0; k < g.size(); ++k) {
      Vector cp = chart, cm = chart, bp = inst.zeta.beta(), bm = inst.zeta.beta();
      if (k < p - 1) {
        cp(k) += 1e-5;
        cm(k) -= 1e-5;
      } else {
        bp(k - (p - 1)) += 1e-5;
        bm(k - (p - 1)) -= 1e-5;
      }
      const double fd = (profile_objective(ZetaParam(chart_to_alpha(cp), bp), inst.data, h, tri) -
                         profile_objective(ZetaParam(chart_to_alpha(cm), bm), inst.data, h, tri)) /
                        2e-5;
      CAPTURE(seed);
      CAPTURE(k);
      CHECK(relative_gap(g(k), fd) < 1e-4);
    }
  }
}

TEST_CASE("plug-in gradient is close to the exact gradient") {
  const Instance inst = random_instance(7, 300, 3, 2);
  const Bandwidth h = Bandwidth::fixed(0.2);
  const Vector exact = profile_gradient(inst.zeta, inst.data, h, Kernel());
  const Vector plug = profile_gradient(inst.zeta, inst.data, h, Kernel(), GradientMode::PlugIn);
  CHECK((exact - plug).norm() < 0.1 * exact.norm());
  const Vector fd = profile_gradient(inst.zeta, inst.data, h, Kernel(), GradientMode::FiniteDifference);
  CHECK((exact - fd).norm() < 1e-5 * exact.norm());
}

TEST_CASE("beta gradient is the smoothed-covariate normal equation residual") {
  const Instance inst = random_instance(30, 120, 2, 3);
  const Bandwidth h = Bandwidth::fixed(0.25);
  const IndexSmoother sm(inst.data.z() * inst.zeta.alpha(), h.h, Kernel());
  const Matrix xt = inst.data.x() - sm.level(inst.data.x());
  const Vector yt = inst.data.y() - sm.level(inst.data.y());
  const Vector expected = -2.0 * xt.transpose() * (yt - xt * inst.zeta.beta());
  const Vector g = profile_gradient(inst.zeta, inst.data, h, Kernel());
  CHECK((g.tail(3) - expected).cwiseAbs().maxCoeff() < 1e-9 * (1 + expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("optimizer matches the angle grid-search oracle") {
  const Kernel tri;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomStream rng(500 + seed, 0);
    const Index n = 60;
    Matrix z(n, 2), x(n, 1);
    Vector y(n);
    const double angle = 0.3 + 0.1 * seed;
    for (Index i = 0; i < n; ++i) {
      z.row(i) << rng.uniform(), rng.uniform();
      x(i, 0) = rng.normal();
      const double u = std::cos(angle) * z(i, 0) + std::sin(angle) * z(i, 1);
      y(i) = std::sin(3 * u) + 0.5 * x(i, 0) + 0.1 * rng.normal();
    }
    const Dataset data(y, z, x);
    const double h = 0.35;
    const SphereChart chart = SphereChart::standard(2);
    const ProfileProblem problem(data, h, tri, chart, BetaMap::identity(2, 1));
    auto q_at = [&](double theta) {
      Vector v(1);
      v << std::sin(theta);
      return problem.evaluate(v, false).q;
    };
    double best_theta = 0.0, best_q = INFINITY;
    for (int k = 0; k < 2000; ++k) {
      const double theta = std::numbers::pi / 2 * k / 2000.0;
      const double q = q_at(theta);
      if (q < best_q) best_q = q, best_theta = theta;
    }
    // Golden-section polish inside the bracketing grid cell.
    double lo = best_theta - std::numbers::pi / 2 / 2000.0, hi = best_theta + std::numbers::pi / 2 / 2000.0;
    hi = std::min(hi, std::numbers::pi / 2 - 1e-9);
    const double gr = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 80; ++it) {
      const double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
      if (q_at(a) < q_at(b)) hi = b;
      else lo = a;
    }
    const double oracle = std::min(best_q, q_at(0.5 * (lo + hi)));

    FitOptions opt;
    opt.bandwidth = Bandwidth::fixed(h);
    const PlsimFit fit = fit_plsim(data, opt);
    CAPTURE(seed);
    CHECK(fit.converged);
    CHECK(relative_gap(fit.q_value, oracle) < 1e-6);
  }
}

TEST_CASE("fit on model 4.1 recovers the direction") {
  const SimSample s = gen_model41(200, 3);
  const auto t0 = std::chrono::steady_clock::now();
  const PlsimFit fit = fit_plsim(s.data);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("model 4.1 fit: " << secs << " s, iterations " << fit.iterations);
  CHECK(fit.converged);
  CHECK(std::abs(fit.zeta_hat.alpha()(0) - std::sqrt(0.5)) < 0.05);
  CHECK(fit.sigma2_hat == doctest::Approx(fit.q_value / 200.0));
  CHECK(fit.eta_curve.size() > 90);
  CHECK(fit.gradient_norm < 1e-6 * 200 * 10);
  for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
    CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1]);
}

TEST_CASE("fit on model 4.2 and on the 8+12 design") {
  const SimSample s = gen_model42(100, 0.1, 0.3, 5);
  const PlsimFit fit = fit_plsim(s.data);
  CHECK(fit.converged);
  CHECK(std::abs(fit.zeta_hat.beta()(0) - 0.3) < 0.1);
  CHECK((fit.zeta_hat.alpha() - s.alpha).norm() < 0.1);

  const SimSample big = gen_example2(Scenario::I, 200, 0.1, std::uint64_t{9});
  const auto t0 = std::chrono::steady_clock::now();
  const PlsimFit f2 = fit_plsim(big.data);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("p=8 q=12 fit: " << secs << " s, iterations " << f2.iterations << ", h " << f2.h.h);
  CHECK(f2.converged);
  CHECK((f2.zeta_hat.alpha() - big.alpha).norm() < 0.1);
  CHECK((f2.zeta_hat.beta() - big.beta).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("scale equivariance") {
  const Instance inst = random_instance(44, 150, 3, 2);
  FitOptions opt;
  opt.bandwidth = Bandwidth::fixed(0.3);
  opt.tol = 1e-10;
  const PlsimFit a = fit_plsim(inst.data, opt);
  const Dataset scaled((3.0 * inst.data.y()).eval(), inst.data.z(), inst.data.x());
  const PlsimFit b = fit_plsim(scaled, opt);
  CHECK((a.zeta_hat.alpha() - b.zeta_hat.alpha()).norm() < 1e-6);
  CHECK((3.0 * a.zeta_hat.beta() - b.zeta_hat.beta()).norm() < 1e-6 * 3.0 * a.zeta_hat.beta().norm());
  CHECK(relative_gap(b.sigma2_hat, 9.0 * a.sigma2_hat) < 1e-6);
}

TEST_CASE("D-hat structure") {
  // Constant link: eta' is zero so the index block vanishes.
  RandomStream rng(60, 0);
  const Index n = 2000;
  Matrix z(n, 2), x(n, 2);
  for (Index i = 0; i < n; ++i) {
    z.row(i) << rng.uniform(), rng.uniform();
    x.row(i) << rng.normal(), 2.0 * rng.uniform();
  }
  Vector beta(2);
  beta << 1.0, -1.0;
  const Vector y = (x * beta).array() + 2.0;
  const Dataset data(y, z, x);
  const ZetaParam zeta(IndexParam::normalized(Vector::Ones(2)), beta);
  const Matrix d = estimate_dhat(zeta, data, Bandwidth::fixed(0.2), Kernel());
  CHECK(d.topLeftCorner(2, 2).cwiseAbs().maxCoeff() < 1e-20);
  // X independent of the index: lower block near cov(X) = diag(1, 1/3).
  CHECK(std::abs(d(2, 2) - 1.0) < 0.1);
  CHECK(std::abs(d(3, 3) - 1.0 / 3.0) < 0.1 / 3.0);
  CHECK(std::abs(d(2, 3)) < 0.05);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // alpha' (z-part) is small for a real fit.
  const SimSample s = gen_model42(400, 0.1, 0.3, 8);
  const PlsimFit fit = fit_plsim(s.data);
  const Vector a = fit.zeta_hat.alpha();
  CHECK(a.dot(fit.dhat.topLeftCorner(3, 3) * a) < 1e-2 * fit.dhat.topLeftCorner(3, 3).trace());
  CHECK(fit.covariance_ok);
  CHECK((fit.se.array() > 0).all());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fit.dhat);
  CHECK(eig.eigenvalues().minCoeff() > -1e-8);
}

TEST_CASE("standard errors") {
  const Covariance c = standard_errors(Matrix::Identity(4, 4), 1.0, 100);
  for (Index k = 0; k < 4; ++k) CHECK(c.se(k) == doctest::Approx(0.1));
  // Structural null direction along alpha is ignored.
  Vector alpha(2);
  alpha << 0.6, 0.8;
  Matrix d = Matrix::Identity(3, 3);
  d.topLeftCorner(2, 2) -= alpha * alpha.transpose();
  const Covariance c2 = standard_errors(d, 1.0, 100, &alpha);
  CHECK(c2.se.allFinite());
  CHECK(c2.se(2) == doctest::Approx(0.1));
  try {
    standard_errors(Matrix::Zero(3, 3), 1.0, 100);
    FAIL("expected SingularCovariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularCovariance);
  }
}

TEST_CASE("linear submodel standard errors match the smoothed-covariate OLS formula") {
  RandomStream rng(61, 0);
  const Index n = 200;
  Matrix z(n, 1), x(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    z(i, 0) = rng.uniform();
    x.row(i) << rng.normal() + z(i, 0), rng.normal();
    y(i) = std::sin(2 * z(i, 0)) + x(i, 0) - 0.5 * x(i, 1) + 0.3 * rng.normal();
  }
  const Dataset data(y, z, x);
  FitOptions opt;
  opt.bandwidth = Bandwidth::fixed(0.2);
  const PlsimFit fit = fit_plsim(data, opt);
  const IndexSmoother sm(z.col(0), 0.2, Kernel());
  const Matrix xt = x - sm.level(x);
  const Matrix ols_cov = fit.sigma2_hat * (xt.transpose() * xt).inverse();
  for (Index k = 0; k < 2; ++k) CHECK(relative_gap(fit.se(1 + k), std::sqrt(ols_cov(k, k))) < 0.05);
}

TEST_CASE("efficient score is small at the optimum") {
  const SimSample s = gen_model42(200, 0.1, 0.3, 12);
  const PlsimFit fit = fit_plsim(s.data);
  const Vector score = efficient_score(fit.zeta_hat, s.data, fit.h, fit.kernel);
  const Vector g = profile_gradient(fit.zeta_hat, s.data, fit.h, fit.kernel, GradientMode::PlugIn);
  CHECK(score.isApprox(-0.5 * g));
  CHECK(score.cwiseAbs().maxCoeff() < 0.05 * 200);
}
