#pragma once

#include <vector>

#include "plsim/common.hpp"
#include "plsim/dataset.hpp"
#include "plsim/index_param.hpp"
#include "plsim/kernel.hpp"

namespace plsim {

/// Kernel half-width in units of the index.
struct Bandwidth {
  enum class Source { Fixed, CrossValidated };

  double h = 0.0;
  Source source = Source::Fixed;

  static Bandwidth fixed(double h);
  static Bandwidth cross_validated(double h) { return Bandwidth{h, Source::CrossValidated}; }
};

/// Weighted least-squares level/slope at one evaluation point.
struct LocalFit {
  double a_hat = 0.0;
  double b_hat = 0.0;
  /// s0*s2 - s1^2 after the ridge safeguard.
  double denom = 0.0;
  Index effective_n = 0;
  bool ridged = false;
};

/// Ridge safeguard: when s0*s2 - s1^2 <= kRidgeTrigger * s0 * s2 the slope
/// moment s2 is replaced by s2 + kRidgeScale * h^2 * s0.
inline constexpr double kRidgeTrigger = 1e-6;
inline constexpr double kRidgeScale = 1e-6;

/// Local linear fit of `ystar` on `lambda` at `u` with weights K_h(lambda_i - u).
/// Throws DegenerateNeighborhood if fewer than two points fall in the window.
LocalFit local_linear_fit(double u, const Vector& lambda, const Vector& ystar, Bandwidth h, const Kernel& kernel);

/// Link estimate at u for fixed zeta: lambda = Z alpha, ystar = Y - X beta.
LocalFit eta_hat(double u, const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel);

/// Leave-in local linear estimate of E(xi | lambda) at every sample point, per column.
Matrix conditional_mean_smooth(const Matrix& xi, const Vector& lambda, Bandwidth h, const Kernel& kernel);

/// 20 log-spaced values from 0.05 R to 0.5 R, R = range(lambda).
std::vector<Bandwidth> default_bandwidth_grid(const Vector& lambda, int points = 20);

/// Mean leave-one-out squared prediction error; +inf when some point has a
/// degenerate leave-one-out window.
double cv_score(const Vector& lambda, const Vector& ystar, Bandwidth h, const Kernel& kernel);

/// Grid minimizer of cv_score at fixed zeta (ties go to the larger h).
Bandwidth cv_bandwidth(const Dataset& data, const ZetaParam& zeta, const std::vector<Bandwidth>& grid,
                       const Kernel& kernel);
Bandwidth cv_bandwidth(const Dataset& data, const ZetaParam& zeta, const Kernel& kernel);

/// Linear smoother evaluated at every sample point for one index vector.
/// Windows are contiguous in sorted-index order, so the level weights are
/// stored as one dense run per row.
class IndexSmoother {
 public:
  IndexSmoother(const Vector& lambda, double h, const Kernel& kernel);

  Index n() const { return static_cast<Index>(rows_.size()); }
  double bandwidth() const { return h_; }
  const Vector& lambda() const { return lambda_; }

  /// Level estimates S*y at every sample point (row i corresponds to lambda_i).
  Vector level(const Vector& y) const;
  Matrix level(const Matrix& m) const;
  /// Slope estimates (derivative of the local line) at every sample point.
  Vector slope(const Vector& y) const;

  /// sum_i weights_i * d(level_i(ystar)) / d(alpha) for lambda = Z alpha,
  /// including the dependence of the kernel weights on alpha.
  Vector index_derivative(const Vector& ystar, const Vector& weights, const Matrix& z) const;

  /// Number of rows where the ridge safeguard was active.
  Index ridged_rows() const;

 private:
  struct Row {
    Index lo = 0;  // window [lo, hi) in sorted order
    Index hi = 0;
    Index offset = 0;  // start of this row's weights in level_weights_
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;  // ridge-adjusted
    double ridge = 0.0;
    double den = 0.0;
  };

  Vector lambda_;
  double h_;
  Kernel kernel_;
  std::vector<Index> order_;  // sorted position -> sample index
  Vector sorted_lambda_;
  std::vector<Row> rows_;  // indexed by sample index
  std::vector<double> level_weights_;
};

}  // namespace plsim
