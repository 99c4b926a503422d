#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdae {

enum class ErrorCode {
  NoConvergence,
  SingularJacobian,
  NonFiniteEvaluation,
  InconsistentInput,
  DomainError,
  DimensionMismatch,
  SingularInnovationCovariance,
  AlgebraicNoConvergence,
  InfeasibleQP,
  RankDeficientConstraints,
  MaxIterations,
  LineSearchFailure,
  IntegrationFailure,
  InvalidArgument,
  ParseError,
  RunError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above. Callers
/// that need to distinguish failure modes switch on code(); what() holds the
/// human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace sdae
