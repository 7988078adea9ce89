#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plsim/common.hpp"
#include "plsim/dataset.hpp"
#include "plsim/kernel.hpp"
#include "plsim/profile.hpp"

namespace plsim {

/// H0: A zeta = delta with A of size m x (p+q) and full row rank.
struct LinearHypothesis {
  Matrix a_mat;
  Vector delta;

  /// Throws RankDeficientA (or InvalidInput on shape mismatch).
  void validate(Index p_plus_q) const;
  Index m() const { return a_mat.rows(); }
};

/// Rows selecting zeta coordinates `coords` (0-based in the stacked
/// (alpha, beta) vector), each tested against `value`.
LinearHypothesis coordinate_hypothesis(Index p_plus_q, const std::vector<Index>& coords, double value = 0.0);

enum class TestMethod { T1, Wald, T2 };
std::string to_string(TestMethod method);
TestMethod parse_test_method(const std::string& text);

struct TestResult {
  TestMethod method = TestMethod::T1;
  double statistic = 0.0;
  double df = 0.0;
  double noncentrality = 0.0;
  double p_value = 1.0;
  double bandwidth = 0.0;
  Kernel kernel;
  Index n = 0;
  /// Residual sums of squares under the null and the alternative (T1, T2).
  double rss_null = 0.0;
  double rss_alt = 0.0;
  /// Restricted estimate (T1 only).
  std::optional<ZetaParam> zeta_null;
  ZetaParam zeta_alt;
  std::vector<std::string> warnings;
};

/// T1 = n {Q(H0) - Q(H1)} / Q(H1), referred to chi-square with m df. Q(H0)
/// minimises the profile objective over {A zeta = delta, |alpha| = 1} by
/// reparametrising beta through the constraint and restricting alpha to the
/// circle cut out of the sphere by any constraints on alpha alone.
/// `unrestricted` is the H1 fit; its bandwidth is used for both fits.
TestResult test_linear_t1(const Dataset& data, const LinearHypothesis& hyp, const PlsimFit& unrestricted,
                          const FitOptions& options = {});
TestResult test_linear_t1(const Dataset& data, const LinearHypothesis& hyp, const FitOptions& options = {});

/// Restricted minimiser of Q under H0 at bandwidth h.
struct RestrictedFit {
  ZetaParam zeta;
  double q_value = 0.0;
  bool converged = false;
  int iterations = 0;
};
RestrictedFit fit_restricted(const Dataset& data, const LinearHypothesis& hyp, const ZetaParam& start, Bandwidth h,
                             const FitOptions& options = {});

/// W = (A zeta - delta)' (A cov A')^{-1} (A zeta - delta) with cov = sigma^2 D^+ / n.
/// Throws SingularMiddleMatrix, RankDeficientA.
TestResult test_linear_wald(const PlsimFit& fit, const LinearHypothesis& hyp);

enum class RkVariant { Printed, Squared };
RkVariant parse_rk_variant(const std::string& text);

struct KernelConstants {
  double k0 = 0.0;   // K(0)
  double ik2 = 0.0;  // integral of K^2
  double r_k = 0.0;
};

/// Printed variant: the denominator integral of K - K*K/2 equals 1/2 for any
/// density kernel, so r_K = 2 K(0) - int K^2. Squared variant: denominator
/// int (K - K*K/2)^2, the generalised likelihood ratio constant.
KernelConstants kernel_constants(const Kernel& kernel, RkVariant variant = RkVariant::Printed);

/// T2 = (r_K / 2) n {rss(H0) - rss(H1)} / rss(H1) for H0: eta linear, using
/// the H1 estimates of alpha and beta under both hypotheses. Reference
/// distribution chi-square with df_n = r_K |U| {K(0) - int K^2 / 2} / h.
/// Throws DegenerateIndex when the fitted index has fewer than 3 distinct values.
TestResult test_link_t2(const Dataset& data, const PlsimFit& fit, RkVariant variant = RkVariant::Printed);
TestResult test_link_t2(const Dataset& data, const FitOptions& options = {}, RkVariant variant = RkVariant::Printed);

/// Asymptotic power of a level-`level` test of `hyp` when zeta_true holds:
/// noncentrality phi = n sigma^-2 (A zeta - delta)' (A D^+ A')^{-1} (A zeta - delta).
double t1_noncentrality(const LinearHypothesis& hyp, const ZetaParam& zeta_true, const Matrix& dhat, double sigma2,
                        Index n);
double theoretical_power_t1(const LinearHypothesis& hyp, const ZetaParam& zeta_true, const Matrix& dhat,
                            double sigma2, Index n, double level = 0.05);

}  // namespace plsim
