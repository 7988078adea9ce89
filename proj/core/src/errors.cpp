#include "plsim/errors.hpp"

namespace plsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonNumericValue: return "NonNumericValue";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ChartOutOfBall: return "ChartOutOfBall";
    case ErrorCode::ConstraintViolated: return "ConstraintViolated";
    case ErrorCode::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorCode::AllBandwidthsDegenerate: return "AllBandwidthsDegenerate";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NonFiniteSE: return "NonFiniteSE";
    case ErrorCode::InfeasibleConstraint: return "InfeasibleConstraint";
    case ErrorCode::RankDeficientA: return "RankDeficientA";
    case ErrorCode::SingularMiddleMatrix: return "SingularMiddleMatrix";
    case ErrorCode::DegenerateIndex: return "DegenerateIndex";
    case ErrorCode::SimulationFailed: return "SimulationFailed";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, nlohmann::json details)
    : std::runtime_error(message), code_(code), details_(std::move(details)) {}

nlohmann::json Error::to_json() const {
  nlohmann::json out = details_.is_object() ? details_ : nlohmann::json::object();
  out["code"] = std::string(to_string(code_));
  out["message"] = what();
  return out;
}

}  // namespace plsim
