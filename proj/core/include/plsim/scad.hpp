#pragma once

#include <vector>

#include "plsim/common.hpp"
#include "plsim/dataset.hpp"
#include "plsim/index_param.hpp"
#include "plsim/kernel.hpp"
#include "plsim/profile.hpp"
#include "plsim/smoother.hpp"

namespace plsim {

inline constexpr double kScadA = 3.7;

struct ScadPenalty {
  double a = kScadA;
  double lambda = 0.0;
};

/// p'_lambda(theta) for theta >= 0.
double scad_deriv(const ScadPenalty& pen, double theta);
/// p_lambda(theta) for theta >= 0, with p_lambda(0) = 0.
double scad_value(const ScadPenalty& pen, double theta);

enum class PenaltyMode { Both, BetaOnly, AlphaOnly };
PenaltyMode parse_penalty_mode(const std::string& text);

/// Per-coefficient tuning parameters. lambda1[0] is always 0: the first index
/// coefficient carries the sign convention and is never shrunk to zero.
struct PenaltyPlan {
  bool penalize_alpha = true;
  bool penalize_beta = true;
  Vector lambda1;  // length p
  Vector lambda2;  // length q
  double a = kScadA;
};

/// lambda1_j = base * se(alpha_j), lambda2_k = base * se(beta_k); the
/// unpenalized side per `mode` is zero. Throws NonFiniteSE.
PenaltyPlan lambda_plan(double base_lambda, const PlsimFit& unpenalized, PenaltyMode mode);

struct PenalizedOptions {
  double tol = 1e-6;        // inner optimiser tolerance, as in FitOptions
  int max_iter = 200;       // inner optimiser iterations
  int max_outer = 50;       // LQA iterations
  double outer_tol = 1e-6;  // relative change that ends the LQA loop
  /// Coefficients below this magnitude are set to exactly zero. Typically
  /// 1e-8 * (1 + |zeta_unpenalized|_inf).
  double zero_threshold = 1e-8;
};

struct PenalizedFit {
  ZetaParam zeta;
  /// Nonzero alpha and beta coefficients (alpha counted before renormalising).
  Index df = 0;
  double q_value = 0.0;
  double mse = 0.0;  // q_value / n
  /// L_P = Q/2 + n sum p(|alpha_j|) + n sum p(|beta_k|) at every LQA iterate.
  std::vector<double> objective_trace;
  int outer_iterations = 0;
  bool converged = false;
  /// Every beta and every alpha coordinate after the first is zero.
  bool all_zero = false;
};

/// Q/2 + n sum p_{lambda1j}(|alpha_j|) + n sum p_{lambda2k}(|beta_k|).
double penalized_objective(const ZetaParam& zeta, const Dataset& data, const PenaltyPlan& plan, Bandwidth h,
                           const Kernel& kernel);

/// Local quadratic approximation: each iteration replaces the penalties by
/// quadratic majorants with curvature p'(|theta|)/|theta|, minimises the
/// resulting ridge-type profile problem, and freezes coefficients that fall
/// below the zero threshold.
PenalizedFit penalized_fit(const Dataset& data, const PenaltyPlan& plan, const ZetaParam& init, Bandwidth h,
                           const Kernel& kernel, const PenalizedOptions& options = {});

enum class Criterion { Bic, Aic };
Criterion parse_criterion(const std::string& text);

/// log(mse) + c df / n with c = log(n) for BIC. For AIC c = 2(p+q) as printed,
/// or the classical 2 when `classic_aic` is set.
double information_criterion(Criterion criterion, double mse, Index n, Index df, Index p_plus_q,
                             bool classic_aic = false);

struct ScadPathPoint {
  double lambda = 0.0;
  PenalizedFit fit;
  double bic = 0.0;
  double aic = 0.0;
};

struct ScadPath {
  PenaltyMode mode = PenaltyMode::Both;
  Criterion criterion = Criterion::Bic;
  double lambda_max = 0.0;
  std::vector<ScadPathPoint> points;
  std::size_t selected_index = 0;
  std::vector<Index> selected_alpha_support;  // 0-based
  std::vector<Index> selected_beta_support;
  const PenalizedFit& selected() const { return points.at(selected_index).fit; }
};

struct SearchOptions {
  int grid_size = 50;
  /// Extra rounds of an even grid between the neighbours of the current
  /// minimiser. 0 gives the plain single grid.
  int refine_rounds = 2;
  Criterion criterion = Criterion::Bic;
  PenaltyMode mode = PenaltyMode::Both;
  bool classic_aic = false;
  double a = kScadA;
  PenalizedOptions fit;
};

/// lambda_max by doubling from 1 until every coefficient is zero (at most 20
/// doublings), then warm-started fits on an even grid over [0, lambda_max],
/// refined around the minimiser. Points are kept sorted by lambda; the
/// criterion minimiser wins, ties going to the smaller lambda.
ScadPath bic_search(const Dataset& data, const PlsimFit& unpenalized, const SearchOptions& options = {});

/// Unpenalized fit restricted to the given supports (0-based, alpha support
/// must contain 0) at bandwidth `h`. The result is expanded back to full
/// length with zeros off the support; dhat, cov and se refer to the submodel
/// and are zero off the support.
PlsimFit fit_submodel(const Dataset& data, const std::vector<Index>& alpha_support,
                      const std::vector<Index>& beta_support, Bandwidth h, const ZetaParam& init,
                      const FitOptions& options = {});

}  // namespace plsim
