#include "plsim/index_param.hpp"

#include <cmath>

#include "plsim/errors.hpp"

namespace plsim {

IndexParam IndexParam::from_chart(const Vector& chart) {
  const double sq = chart.squaredNorm();
  if (!chart.allFinite() || sq >= 1.0) {
    throw Error(ErrorCode::ChartOutOfBall, "chart coordinates must lie in the open unit ball",
                {{"norm", std::sqrt(sq)}});
  }
  Vector alpha(chart.size() + 1);
  alpha(0) = std::sqrt(1.0 - sq);
  alpha.tail(chart.size()) = chart;
  return IndexParam(std::move(alpha), chart);
}

IndexParam IndexParam::from_alpha(const Vector& alpha) {
  if (alpha.size() < 1 || !alpha.allFinite()) {
    throw Error(ErrorCode::ConstraintViolated, "index vector must be nonempty and finite");
  }
  const double norm = alpha.norm();
  if (std::abs(norm - 1.0) > 1e-12 || alpha(0) <= 0.0) {
    throw Error(ErrorCode::ConstraintViolated, "index vector must have unit norm and a positive first element",
                {{"norm", norm}, {"first", alpha(0)}});
  }
  return IndexParam(alpha, alpha.tail(alpha.size() - 1));
}

IndexParam IndexParam::normalized(const Vector& direction) {
  Vector alpha = direction;
  const double norm = alpha.norm();
  if (!(norm > 0.0) || !std::isfinite(norm) || alpha(0) == 0.0) {
    alpha.setZero();
    alpha(0) = 1.0;
  } else {
    alpha /= norm;
    if (alpha(0) < 0.0) alpha = -alpha;
  }
  Vector chart = alpha.tail(alpha.size() - 1);
  return IndexParam(std::move(alpha), std::move(chart));
}

IndexParam chart_to_alpha(const Vector& chart) { return IndexParam::from_chart(chart); }

Vector alpha_to_chart(const Vector& alpha) { return IndexParam::from_alpha(alpha).chart(); }

Vector ZetaParam::stacked() const {
  Vector out(p() + q());
  out << alpha(), beta();
  return out;
}

}  // namespace plsim
