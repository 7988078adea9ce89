#include "plsim/parametrization.hpp"

#include <cmath>

#include "plsim/errors.hpp"

namespace plsim {

SphereChart::SphereChart(Vector offset, double radius, Matrix basis)
    : offset_(std::move(offset)), radius_(radius), basis_(std::move(basis)) {
  if (offset_.size() != basis_.rows()) throw Error(ErrorCode::InvalidInput, "sphere chart dimension mismatch");
}

SphereChart SphereChart::standard(Index p) { return SphereChart(Vector::Zero(p), 1.0, Matrix::Identity(p, p)); }

SphereChart SphereChart::coordinates(Index p, const std::vector<Index>& active) {
  Matrix basis = Matrix::Zero(p, static_cast<Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) basis(active[k], static_cast<Index>(k)) = 1.0;
  return SphereChart(Vector::Zero(p), 1.0, std::move(basis));
}

Vector SphereChart::alpha(const Vector& v) const {
  const Index k = sphere_dim();
  if (k == 0) return offset_;
  const double sq = v.squaredNorm();
  if (!(sq < 1.0)) {
    throw Error(ErrorCode::ChartOutOfBall, "chart coordinates must lie in the open unit ball",
                {{"norm", std::sqrt(sq)}});
  }
  Vector u(k);
  u(0) = std::sqrt(1.0 - sq);
  u.tail(k - 1) = v;
  return offset_ + radius_ * (basis_ * u);
}

Matrix SphereChart::jacobian(const Vector& v) const {
  const Index k = sphere_dim();
  if (k <= 1) return Matrix::Zero(ambient_dim(), 0);
  const double u0 = std::sqrt(1.0 - v.squaredNorm());
  // du/dv: first row -v'/u0, then identity.
  Matrix du(k, k - 1);
  du.row(0) = -v.transpose() / u0;
  du.bottomRows(k - 1).setIdentity();
  return radius_ * (basis_ * du);
}

Vector SphereChart::chart_of(const Vector& alpha) const {
  const Index k = sphere_dim();
  if (k == 0) return Vector(0);
  Vector u = basis_.transpose() * (alpha - offset_) / radius_;
  if (!(u(0) > 0.0)) {
    throw Error(ErrorCode::ConstraintViolated, "point lies outside the chart's hemisphere", {{"u0", u(0)}});
  }
  return u.tail(k - 1);
}

SphereChart SphereChart::recentred(const Vector& alpha) const {
  const Index k = sphere_dim();
  if (k == 0) return *this;
  Vector u = basis_.transpose() * (alpha - offset_);
  const double norm = u.norm();
  if (!(norm > 0.0)) return *this;
  u /= norm;
  // Householder reflection H with H e1 = u; columns of basis*H stay orthonormal.
  Vector e1 = Vector::Zero(k);
  e1(0) = 1.0;
  Vector w = e1 - u;
  Matrix rot = Matrix::Identity(k, k);
  const double wn = w.squaredNorm();
  if (wn > 1e-30) rot -= 2.0 * w * w.transpose() / wn;
  return SphereChart(offset_, radius_, basis_ * rot);
}

BetaMap BetaMap::identity(Index p, Index q) {
  return BetaMap{Vector::Zero(q), Matrix::Zero(q, p), Matrix::Identity(q, q)};
}

BetaMap BetaMap::coordinates(Index p, Index q, const std::vector<Index>& active) {
  Matrix basis = Matrix::Zero(q, static_cast<Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) basis(active[k], static_cast<Index>(k)) = 1.0;
  return BetaMap{Vector::Zero(q), Matrix::Zero(q, p), std::move(basis)};
}

}  // namespace plsim
