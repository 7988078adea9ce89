#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "plsim/dataset.hpp"
#include "plsim/inference.hpp"
#include "plsim/profile.hpp"
#include "plsim/scad.hpp"
#include "plsim/simlab.hpp"

namespace plsim {

/// Wall-clock fields are dropped when `deterministic` is set so reruns are
/// byte-identical. Non-finite numbers serialise as null.
struct ReportOptions {
  bool deterministic = false;
  /// Include the fitted link curve in fit reports.
  bool include_curve = true;
};

nlohmann::json fit_to_json(const PlsimFit& fit, const Dataset& data, const ReportOptions& opt = {});
nlohmann::json path_to_json(const ScadPath& path, const PlsimFit& unpenalized, const Dataset& data,
                            const ReportOptions& opt = {});
nlohmann::json test_to_json(const TestResult& result, const Dataset* data = nullptr);
nlohmann::json sim_to_json(const SimReport& report, const ReportOptions& opt = {});

/// Two-space indented dump with a trailing newline.
std::string dump_report(const nlohmann::json& j);

std::string to_string(Criterion c);
std::string to_string(PenaltyMode m);
std::string to_string(RkVariant v);
std::string to_string(GradientMode g);

}  // namespace plsim
