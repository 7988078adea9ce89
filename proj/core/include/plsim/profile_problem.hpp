#pragma once

#include <optional>

#include "plsim/common.hpp"
#include "plsim/dataset.hpp"
#include "plsim/kernel.hpp"
#include "plsim/optimizer.hpp"
#include "plsim/parametrization.hpp"
#include "plsim/smoother.hpp"

namespace plsim {

/// How the derivative of Q with respect to the index direction is formed.
enum class GradientMode {
  /// Analytic derivative of the profiled objective, including the kernel
  /// weights' dependence on alpha.
  Exact,
  /// Score form: eta'(Lambda_i) (Z_i - E(Z|Lambda_i)); ignores the weights'
  /// dependence on alpha.
  PlugIn,
  /// Central finite differences of the objective.
  FiniteDifference,
};

/// Quadratic (LQA) penalty curvatures: adds n * sum w_j alpha_j^2 and
/// n * sum w_k beta_k^2 to Q. Empty vectors mean no penalty.
struct QuadraticPenalty {
  Vector alpha;
  Vector beta;
};

/// Profile least-squares problem in chart coordinates v with beta profiled
/// out exactly: for fixed alpha the smoother is linear in the responses, so
/// Q is quadratic in beta and the inner minimisation is a (ridge) least-squares
/// solve. The objective is
///   F(v) = min_gamma Q(alpha(v), beta(alpha, gamma)) + penalty.
class ProfileProblem {
 public:
  ProfileProblem(const Dataset& data, double h, Kernel kernel, SphereChart chart, BetaMap beta_map,
                 QuadraticPenalty penalty = {});

  struct Evaluation {
    Vector alpha;
    Vector beta;
    double q = 0.0;
    double objective = 0.0;
    Vector grad;  // d objective / d v (empty unless requested)
  };

  /// Throws DegenerateNeighborhood / ChartOutOfBall.
  Evaluation evaluate(const Vector& v, bool with_gradient, GradientMode mode = GradientMode::Exact) const;
  /// Objective adaptor for the optimiser: +inf where evaluate throws.
  double objective(const Vector& v, Vector* grad, GradientMode mode = GradientMode::Exact) const;
  /// Inverse of a Gauss-Newton approximation to the Hessian of F at v, or
  /// nullopt if it is not usable.
  std::optional<Matrix> gauss_newton_inverse(const Vector& v) const;

  BfgsResult minimize(const Vector& v0, const BfgsOptions& options, GradientMode mode = GradientMode::Exact) const;

  const SphereChart& chart() const { return chart_; }
  const BetaMap& beta_map() const { return beta_map_; }
  const Dataset& data() const { return data_; }
  double bandwidth() const { return h_; }

 private:
  struct Inner {
    Vector beta;
    Vector residual;  // Ytilde - Xtilde beta
    Matrix xtilde;
    double q = 0.0;
  };
  Inner solve_beta(const IndexSmoother& smoother, const Vector& alpha) const;
  double penalty_value(const Vector& alpha, const Vector& beta) const;

  const Dataset& data_;
  double h_;
  Kernel kernel_;
  SphereChart chart_;
  BetaMap beta_map_;
  QuadraticPenalty penalty_;
  Matrix yx_;  // [Y X]
};

}  // namespace plsim
