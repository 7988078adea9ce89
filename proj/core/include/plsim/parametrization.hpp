#pragma once

#include "plsim/common.hpp"

namespace plsim {

/// Chart on the sphere {offset + radius * basis * u : |u| = 1}, where u is the
/// delete-first-component chart u = (sqrt(1 - |v|^2), v). With offset 0,
/// radius 1 and basis I this is exactly alpha = (sqrt(1 - |chart|^2), chart).
/// Restricted index spaces (coordinates frozen at zero, linear constraints on
/// alpha) use a narrower basis and, for inhomogeneous constraints, an offset.
class SphereChart {
 public:
  static SphereChart standard(Index p);
  /// Unit vectors supported on `active` coordinates; the chart is centred on
  /// the first listed coordinate.
  static SphereChart coordinates(Index p, const std::vector<Index>& active);
  /// General form. `basis` must have orthonormal columns orthogonal to `offset`.
  SphereChart(Vector offset, double radius, Matrix basis);

  Index ambient_dim() const { return basis_.rows(); }
  Index sphere_dim() const { return basis_.cols(); }
  Index free_dim() const { return basis_.cols() > 0 ? basis_.cols() - 1 : 0; }

  /// Maps chart coordinates (|v| < 1) to alpha.
  Vector alpha(const Vector& v) const;
  /// d alpha / d v, ambient_dim x free_dim.
  Matrix jacobian(const Vector& v) const;
  /// Chart coordinates of a point on this sphere; requires a positive first
  /// sphere coordinate.
  Vector chart_of(const Vector& alpha) const;
  /// Rotates the basis so that the chart origin (v = 0) maps to `alpha`,
  /// which must lie on the sphere.
  SphereChart recentred(const Vector& alpha) const;

  const Vector& offset() const { return offset_; }
  double radius() const { return radius_; }
  const Matrix& basis() const { return basis_; }

 private:
  Vector offset_;
  double radius_ = 1.0;
  Matrix basis_;
};

/// beta = base + coupling * alpha + null_basis * gamma. The unrestricted case
/// is base = 0, coupling = 0, null_basis = I.
struct BetaMap {
  Vector base;
  Matrix coupling;
  Matrix null_basis;

  static BetaMap identity(Index p, Index q);
  /// Only the listed coordinates are free; the rest are pinned at zero.
  static BetaMap coordinates(Index p, Index q, const std::vector<Index>& active);

  Index free_dim() const { return null_basis.cols(); }
  Vector beta(const Vector& alpha, const Vector& gamma) const { return base + coupling * alpha + null_basis * gamma; }
};

}  // namespace plsim
