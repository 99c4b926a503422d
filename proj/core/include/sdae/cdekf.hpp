#pragma once

#include "sdae/esdirk.hpp"
#include "sdae/model.hpp"

namespace sdae::ekf {

/// Filtered (or predicted) differential state, consistent algebraic state and
/// differential-state covariance.
struct FilterState {
  Vector x;
  Vector y;
  Matrix P;
};

struct UpdateReport {
  Vector innovation;
  Matrix innovation_covariance;
  Matrix gain;
  Matrix C;
};

/// Measurement update at t_k with u_{k-1} and d_k. Joseph-form covariance.
/// Throws SingularInnovationCovariance when R_e is not positive definite and
/// AlgebraicNoConvergence when the algebraic state cannot be made consistent.
std::pair<FilterState, UpdateReport> filter_update(const Model& model, const FilterState& prior,
                                                   double t, const Vector& measurement,
                                                   const Vector& u_prev, const Vector& d,
                                                   const Matrix& R);

struct PredictConfig {
  esdirk::Method method = esdirk::Method::ESDIRK34;
  int steps = 5;  ///< integration steps per sampling interval
  NewtonSettings newton{};
};

/// One-step prediction over [t, t + Ts]. The mean follows the DAE; per
/// integration step the covariance is propagated as
///   P <- A P A^T + h/2 (A sigma sigma^T A^T + sigma sigma^T),
/// with A the total derivative of x_{n+1} with respect to x_n along the
/// constraint manifold.
FilterState predict(const Model& model, const FilterState& state, double t, const Vector& u,
                    const Vector& d, double Ts, const PredictConfig& config);

/// Same, with a caller-owned integrator (keeps its statistics).
FilterState predict(const Model& model, const FilterState& state, double t, const Vector& u,
                    const Vector& d, double Ts, int steps, esdirk::Integrator& integrator);

/// (P + P^T) / 2.
Matrix symmetrize(const Matrix& P);

}  // namespace sdae::ekf
