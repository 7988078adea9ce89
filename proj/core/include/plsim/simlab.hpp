#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plsim/common.hpp"
#include "plsim/designs.hpp"
#include "plsim/inference.hpp"
#include "plsim/profile.hpp"
#include "plsim/scad.hpp"

namespace plsim {

/// Example ids: 1a (model 4.1), 1b (model 4.2), 2i, 2ii, 2iii (selection),
/// 3 (T1 power), 4 (T2 power).
struct SimDesign {
  std::string example_id = "1a";
  Index n = 200;
  double sigma = 0.2;
  int reps = 200;
  std::uint64_t seed = 1;
  /// Signal grid for examples 3 (c1) and 4 (c2).
  std::vector<double> c_grid;
  double beta = 0.3;  // example 1b
  double level = 0.05;
  Criterion criterion = Criterion::Bic;
  PenaltyMode penalty = PenaltyMode::Both;
  int grid_size = 50;
  bool classic_aic = false;
  RkVariant rk_variant = RkVariant::Printed;
  /// Covariate draws for the model-error expectation in selection runs.
  int eval_draws = 10000;
  FitOptions fit;
  int threads = 1;
};

/// Built-in defaults for an example id. Throws InvalidInput for unknown ids.
SimDesign default_design(const std::string& example_id);

struct ParamSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double mse = 0.0;
};

struct SelectionSummary {
  std::string method;  // "S-BIC", "S-AIC" or "Oracle"
  double mrme_alpha = 0.0;
  double c_alpha = 0.0;
  double i_alpha = 0.0;
  double mrme_beta = 0.0;
  double c_beta = 0.0;
  double i_beta = 0.0;
};

struct PowerPoint {
  double c = 0.0;
  int valid = 0;
  double rejection = 0.0;
  /// Wald rejection rate (example 3 only; NaN otherwise).
  double rejection_wald = 0.0;
  /// Asymptotic power from the noncentral chi-square at the truth (example 3
  /// only; NaN otherwise), averaged over replicates' plug-in D-hat.
  double theoretical = 0.0;
  /// Test statistic of every successful replicate, in replicate order.
  std::vector<double> statistics;
};

struct SimReport {
  SimDesign design;
  std::string kind;  // estimation | selection | power
  std::vector<ParamSummary> params;
  std::vector<SelectionSummary> selection;
  std::vector<PowerPoint> power;
  int attempted = 0;
  int failures = 0;
  double failure_rate = 0.0;
  std::vector<std::string> failure_messages;
  double runtime_seconds = 0.0;
};

/// Runs fn(0..count-1) on `threads` workers. Each index is handled exactly
/// once; callers write results into per-index slots so output order never
/// depends on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Examples 1a / 1b. Per-parameter mean and MSE (plus phi0 = arccos(alpha1)
/// for 1a).
SimReport run_mc_estimation(const SimDesign& design);
/// Examples 2i / 2ii / 2iii: SCAD path with the design's criterion plus the
/// oracle fit on the true support. Reports MRME, C and I for alpha and beta.
SimReport run_mc_selection(const SimDesign& design);
/// Examples 3 (T1 and Wald) and 4 (T2): rejection rate per grid value.
SimReport run_mc_power(const SimDesign& design);
/// Dispatches on the example id.
SimReport run_simulation(const SimDesign& design);

/// "c,rejection[,wald,theoretical]" lines for plotting.
std::string power_csv(const SimReport& report);

/// Fraction of replicates above which a run is declared failed.
inline constexpr double kMaxFailureRate = 0.05;

}  // namespace plsim
