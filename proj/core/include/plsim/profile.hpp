#pragma once

#include <optional>
#include <vector>

#include "plsim/common.hpp"
#include "plsim/dataset.hpp"
#include "plsim/errors.hpp"
#include "plsim/index_param.hpp"
#include "plsim/kernel.hpp"
#include "plsim/profile_problem.hpp"
#include "plsim/smoother.hpp"

namespace plsim {

/// One sample of the fitted link curve. `variance_constant` is the plug-in
/// sigma^2 * int K^2 / f(u) with f a kernel density estimate at the same h.
struct EtaSample {
  double u = 0.0;
  double eta = 0.0;
  double derivative = 0.0;
  double variance_constant = 0.0;
};

struct PlsimFit {
  ZetaParam zeta_hat;
  Bandwidth h;
  Kernel kernel;
  Index n = 0;
  double sigma2_hat = 0.0;
  Matrix dhat;
  Matrix cov;
  Vector se;
  /// False when D-hat is too rank deficient for standard errors (se = NaN).
  bool covariance_ok = true;
  double q_value = 0.0;
  std::vector<EtaSample> eta_curve;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  /// Q at every accepted optimiser iterate (final bandwidth only).
  std::vector<double> objective_trace;
  /// True when the post-fit cross-validation moved h by more than 20% and
  /// the fit was repeated at the new bandwidth.
  bool bandwidth_refit = false;
};

/// Carries the best iterate when the optimiser hits max_iter.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(PlsimFit best, int max_iter);
  const PlsimFit& best() const { return best_; }

 private:
  PlsimFit best_;
};

struct FitOptions {
  /// Starting point; nullopt means automatic (OLS direction plus a small scan
  /// of candidate directions). Only the index part matters: beta is profiled.
  std::optional<ZetaParam> init;
  /// Fixed bandwidth; nullopt selects it by cross-validation.
  std::optional<Bandwidth> bandwidth;
  /// Candidate bandwidths for cross-validation; empty uses the default
  /// log grid over the index range.
  std::vector<double> bandwidth_grid;
  Kernel kernel;
  /// Relative tolerance: gradient tolerance is tol * n * var(Y), step
  /// tolerance is tol * (1 + |chart|).
  double tol = 1e-6;
  int max_iter = 200;
  GradientMode gradient = GradientMode::Exact;
};

/// Q(zeta) = sum_i {Y_i - eta_hat(Z_i' alpha, zeta) - X_i' beta}^2.
double profile_objective(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel);

/// Gradient of Q with respect to (chart, beta), length (p-1) + q.
Vector profile_gradient(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel,
                        GradientMode mode = GradientMode::Exact);

/// Empirical efficient score sum_i e_i * (eta'(L_i) Ztilde_i mapped to the
/// chart ; Xtilde_i), length (p-1) + q. Zero at the estimator's first-order
/// condition up to smoothing error.
Vector efficient_score(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel);

/// OLS-based start, refined by a scan over a few candidate directions.
ZetaParam auto_initial(const Dataset& data, const Kernel& kernel);

PlsimFit fit_plsim(const Dataset& data, const FitOptions& options = {});

/// D-hat = n^-1 sum v_i v_i', v_i = (eta'(L_i) (Z_i - E(Z|L_i)) ; X_i - E(X|L_i)).
Matrix estimate_dhat(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel);

struct Covariance {
  Matrix cov;
  Vector se;
};

/// cov = sigma2 * D^+ / n with eigenvalues below 1e-10 * max truncated. When
/// `alpha` is given, D is first projected onto the tangent space of the unit
/// sphere at alpha, which removes the structural null direction exactly.
/// Throws SingularCovariance if rank < dim - 1.
Covariance standard_errors(const Matrix& dhat, double sigma2, Index n, const Vector* alpha = nullptr);

/// Link curve on `points` uniform points over the index range.
std::vector<EtaSample> link_curve(const ZetaParam& zeta, const Dataset& data, Bandwidth h, const Kernel& kernel,
                                  double sigma2, int points = 101);

}  // namespace plsim
