#include "plsim/designs.hpp"

#include <cmath>
#include <numbers>

#include "plsim/errors.hpp"

namespace plsim {

namespace {

std::vector<std::string> names(const char* prefix, Index count) {
  std::vector<std::string> out;
  for (Index j = 0; j < count; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

Matrix uniform_matrix(Index n, Index d, RandomStream& rng) {
  // Row-major draw order so a dataset's rows do not depend on n.
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = rng.uniform();
  return m;
}

}  // namespace

double sin_link(double u) { return std::sin((u - kSinLinkA) * std::numbers::pi / (kSinLinkB - kSinLinkA)); }

Scenario parse_scenario(const std::string& text) {
  if (text == "i") return Scenario::I;
  if (text == "ii") return Scenario::II;
  if (text == "iii") return Scenario::III;
  throw Error(ErrorCode::InvalidInput, "unknown scenario '" + text + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::I: return "i";
    case Scenario::II: return "ii";
    case Scenario::III: return "iii";
  }
  return "?";
}

SimSample gen_model41(Index n, RandomStream& rng) {
  const Matrix z = uniform_matrix(n, 2, rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double t = (z(i, 0) + z(i, 1) - 1.0) / std::numbers::sqrt2;
    y(i) = 4.0 * t * t + 4.0 + 0.2 * rng.normal();
  }
  Vector alpha = Vector::Constant(2, 1.0 / std::numbers::sqrt2);
  return {Dataset(y, z, Matrix(n, 0), names("z", 2), {}), alpha, Vector(0), 0.2};
}

SimSample gen_model41(Index n, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  return gen_model41(n, rng);
}

SimSample gen_model42(Index n, double sigma, double beta, RandomStream& rng) {
  const Matrix z = uniform_matrix(n, 3, rng);
  Matrix x(n, 1);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = (i % 2 == 0) ? 0.0 : 1.0;  // odd-numbered observations (1-based) get 0
    const double u = z.row(i).sum() / std::sqrt(3.0);
    y(i) = sin_link(u) + beta * x(i, 0) + sigma * rng.normal();
  }
  Vector b(1);
  b << beta;
  return {Dataset(y, z, x, names("z", 3), names("x", 1)), Vector::Constant(3, 1.0 / std::sqrt(3.0)), b, sigma};
}

SimSample gen_model42(Index n, double sigma, double beta, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  return gen_model42(n, sigma, beta, rng);
}

Vector example2_alpha() {
  Vector a(8);
  a << 1.0, 3.0, 1.5, 0.5, 0.0, 0.0, 0.0, 0.0;
  return a / std::sqrt(12.5);
}

Vector example2_beta() {
  Vector b(12);
  b << 3.0, 2.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.2, 0.3, 0.15, 0.0, 0.0;
  return b;
}

Covariates draw_example2_covariates(Scenario scenario, Index n, RandomStream& rng) {
  constexpr Index p = 8;
  constexpr Index q = 12;
  Covariates c{Matrix(n, p), Matrix(n, q)};
  switch (scenario) {
    case Scenario::I:
      c.z = uniform_matrix(n, p, rng);
      c.x = uniform_matrix(n, q, rng);
      break;
    case Scenario::II:
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) c.z(i, j) = rng.normal();
        for (Index j = 0; j < q; ++j) c.x(i, j) = (j == 5 || j == 6) ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
      }
      break;
    case Scenario::III: {
      Matrix sigma(q, q);
      for (Index i = 0; i < q; ++i)
        for (Index j = 0; j < q; ++j) sigma(i, j) = 0.25 * std::pow(0.4, std::abs(static_cast<double>(i - j)));
      const Matrix chol = sigma.llt().matrixL();
      c.z = uniform_matrix(n, p, rng);
      Vector e(q);
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < q; ++j) e(j) = rng.normal();
        c.x.row(i) = (chol * e).transpose();
        const double z1 = c.z(i, 0);
        const double z2 = c.z(i, 1);
        c.x(i, 0) += 1.5 * std::exp(1.5 * z1);
        c.x(i, 1) += 5.0 * z1;
        c.x(i, 2) += 5.0 * std::sqrt(z2);
        c.x(i, 3) += 3.0 * z1 + z2 * z2;
      }
      break;
    }
  }
  return c;
}

SimSample gen_example2(Scenario scenario, Index n, double sigma, RandomStream& rng) {
  Covariates c = draw_example2_covariates(scenario, n, rng);
  const Vector alpha = example2_alpha();
  const Vector beta = example2_beta();
  Vector y = c.x * beta;
  const Vector index = c.z * alpha;
  for (Index i = 0; i < n; ++i) y(i) += sin_link(index(i)) + sigma * rng.normal();
  return {Dataset(y, std::move(c.z), std::move(c.x), names("z", 8), names("x", 12)), alpha, beta, sigma};
}

SimSample gen_example2(Scenario scenario, Index n, double sigma, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  return gen_example2(scenario, n, sigma, rng);
}

SimSample gen_example3(Index n, double sigma, double c1, RandomStream& rng) {
  Covariates c = draw_example2_covariates(Scenario::I, n, rng);
  const Vector alpha = example2_alpha();
  Vector beta = example2_beta();
  for (Index k : {2, 3, 4, 6}) beta(k) = c1;
  Vector y = c.x * beta;
  const Vector index = c.z * alpha;
  for (Index i = 0; i < n; ++i) y(i) += sin_link(index(i)) + sigma * rng.normal();
  return {Dataset(y, std::move(c.z), std::move(c.x), names("z", 8), names("x", 12)), alpha, beta, sigma};
}

SimSample gen_example4(Index n, double sigma, double c2, RandomStream& rng) {
  const Matrix z = uniform_matrix(n, 3, rng);
  const Matrix x = uniform_matrix(n, 2, rng);
  Vector beta(2);
  beta << -0.5, 0.3;
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double u = z.row(i).sum() / std::sqrt(3.0);
    y(i) = c2 * sin_link(u) + u + x.row(i).dot(beta) + sigma * rng.normal();
  }
  return {Dataset(y, z, x, names("z", 3), names("x", 2)), Vector::Constant(3, 1.0 / std::sqrt(3.0)), beta, sigma};
}

}  // namespace plsim
