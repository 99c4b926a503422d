#include "sdae/errors.hpp"

namespace sdae {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorCode::InconsistentInput: return "InconsistentInput";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularInnovationCovariance: return "SingularInnovationCovariance";
    case ErrorCode::AlgebraicNoConvergence: return "AlgebraicNoConvergence";
    case ErrorCode::InfeasibleQP: return "InfeasibleQP";
    case ErrorCode::RankDeficientConstraints: return "RankDeficientConstraints";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RunError: return "RunError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace sdae
