#pragma once

#include "plsim/common.hpp"

namespace plsim {

/// Unit-norm index direction with a positive first element, stored together
/// with its free chart coordinates (the trailing p-1 elements).
class IndexParam {
 public:
  /// alpha = (1).
  IndexParam() : alpha_(Vector::Ones(1)), chart_(0) {}
  /// alpha = (sqrt(1 - |chart|^2), chart). Throws ChartOutOfBall if |chart| >= 1.
  static IndexParam from_chart(const Vector& chart);
  /// Throws ConstraintViolated unless |alpha| = 1 (to 1e-12) and alpha[0] > 0.
  static IndexParam from_alpha(const Vector& alpha);
  /// Rescales to unit norm and flips the sign so the first element is positive.
  /// Falls back to the first basis vector when the first element is zero.
  static IndexParam normalized(const Vector& direction);

  const Vector& alpha() const { return alpha_; }
  const Vector& chart() const { return chart_; }
  Index dim() const { return alpha_.size(); }

 private:
  IndexParam(Vector alpha, Vector chart) : alpha_(std::move(alpha)), chart_(std::move(chart)) {}

  Vector alpha_;
  Vector chart_;
};

IndexParam chart_to_alpha(const Vector& chart);
Vector alpha_to_chart(const Vector& alpha);

struct CoefParam {
  Vector beta;
};

/// zeta = (alpha', beta')'.
struct ZetaParam {
  IndexParam index;
  CoefParam coef;

  ZetaParam() = default;
  ZetaParam(IndexParam index_, Vector beta) : index(std::move(index_)), coef{std::move(beta)} {}

  const Vector& alpha() const { return index.alpha(); }
  const Vector& beta() const { return coef.beta; }
  Index p() const { return index.dim(); }
  Index q() const { return coef.beta.size(); }
  /// Stacked (alpha, beta), length p + q.
  Vector stacked() const;
};

}  // namespace plsim
