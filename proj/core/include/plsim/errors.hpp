#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace plsim {

/// Stable, machine-readable failure categories. The string form is part of the
/// CLI contract (it appears as "code" in the stderr error JSON).
enum class ErrorCode {
  MissingColumn,
  NonFiniteValue,
  NonNumericValue,
  TooFewRows,
  InvalidInput,
  ChartOutOfBall,
  ConstraintViolated,
  DegenerateNeighborhood,
  AllBandwidthsDegenerate,
  NoConvergence,
  SingularCovariance,
  NonFiniteSE,
  InfeasibleConstraint,
  RankDeficientA,
  SingularMiddleMatrix,
  DegenerateIndex,
  SimulationFailed,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nlohmann::json::object());

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  /// {"code": ..., "message": ..., <details...>}
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace plsim
