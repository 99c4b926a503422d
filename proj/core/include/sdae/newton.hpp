#pragma once

#include "sdae/model.hpp"

namespace sdae {

/// Convergence test shared by the stage solves and the plant simulator:
///   max_j |R_j| / max(abs, rel * |S_j|) < tau.
struct NewtonSettings {
  double tau = 0.1;
  double abs = 1e-6;
  double rel = 1e-3;
  int max_iterations = 20;

  double scaled_norm(const Vector& residual, const Vector& iterate) const;
};

/// LU factorization that refuses (numerically) singular or non-finite matrices.
class LuFactor {
 public:
  LuFactor() = default;
  /// Throws SingularJacobian with `what` in the message.
  LuFactor(const Matrix& a, const char* what);

  Vector solve(const Vector& rhs) const { return lu_.solve(rhs); }
  Matrix solve(const Matrix& rhs) const { return lu_.solve(rhs); }
  Index rows() const { return lu_.rows(); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

}  // namespace sdae
