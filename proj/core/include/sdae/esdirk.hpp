#pragma once

#include "sdae/model.hpp"
#include "sdae/newton.hpp"
#include "sdae/tableau.hpp"

#include <optional>
#include <vector>

namespace sdae::esdirk {

/// Combined state s = [x; y].
inline Vector combine(const Vector& x, const Vector& y) {
  Vector s(x.size() + y.size());
  s << x, y;
  return s;
}

/// LU factors of
///   M = [ I - h*gamma*df/dx   -h*gamma*df/dy ]
///       [ -dg/dx              -dg/dy         ]
/// evaluated at the start of the step.
struct IterationMatrix {
  LuFactor lu;
  double h = 0.0;
  double t = 0.0;
  Vector s;
};

IterationMatrix build_iteration_matrix(const Model& model, double gamma, double h, double t,
                                       const Vector& s, const Vector& u, const Vector& d);

/// Stage residual R(S) = [X - h*gamma*f(T, X, Y) - psi; -g(T, X, Y)].
Vector stage_residual(const Model& model, double gamma, double h, double T, const Vector& psi,
                      const Vector& S, const Vector& u, const Vector& d);

/// Result of the inexact Newton iteration for one implicit stage. `iterates`
/// holds S^[0], ..., S^[v-1]; the last one passed the convergence test and is
/// `value`. corrections = v - 1.
struct StageSolution {
  Vector value;
  int corrections = 0;
  std::vector<Vector> iterates;
};

/// Convergence is checked before every correction, so a guess that already
/// satisfies the test is returned with zero corrections unless
/// min_corrections asks for more. Integration steps use one, which keeps the
/// sensitivities of a perfectly predicted stage from collapsing to those of
/// the guess.
StageSolution newton_solve_stage(const Model& model, const ButcherTableau& tableau,
                                 const IterationMatrix& M, const Vector& psi, double T,
                                 const Vector& u, const Vector& d, const Vector& guess,
                                 const NewtonSettings& settings, int min_corrections = 0);

/// Optional quadrature carried along with the integration, e.g. a running
/// cost. Its right-hand side must not depend on the quadrature state itself,
/// so it is evaluated on the converged stages without entering the Newton
/// system.
struct Quadrature {
  Index size = 0;
  VectorFunction q;
  MatrixFunction dq_dx, dq_dy, dq_du;  ///< empty entries use finite differences
};

/// Forward sensitivities with respect to a parameter vector p, given
///   ds_0/dp (initial state) and du/dp (constant over the integration).
/// dq_dp is the sensitivity of the quadrature state when one is integrated.
struct Sensitivity {
  Matrix ds_dp;
  Matrix du_dp;
  Matrix dq_dp;
};

/// (ds/ds0, ds/du) in the layout of the integrator's combined state.
struct SensitivityPair {
  Matrix ds_ds0;
  Matrix ds_du;

  static SensitivityPair identity(Index ns, Index nu);
  Sensitivity as_sensitivity() const;
  static SensitivityPair from_sensitivity(const Sensitivity& s, Index ns);
};

/// Everything the next step needs to apply stage value predictors and to
/// differentiate them.
struct StepRecord {
  double t = 0.0;
  double h = 0.0;
  Vector s_start;
  std::vector<Vector> stages;     ///< converged S_1..S_s, S_1 = s_k, S_s = s_{k+1}
  std::vector<int> iterates;      ///< v_{i,k}; 0 for the explicit first stage
  Vector error_estimate;          ///< x_{k+1} - x_hat_{k+1}
  bool used_predictor = false;
  Matrix start_sens;              ///< ds_k/dp (only with sensitivities)
  std::vector<Matrix> stage_sens; ///< dS_j/dp (only with sensitivities)
};

struct StepResult {
  Vector s;
  Vector q;
  StepRecord record;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> s;
  std::vector<StepRecord> records;
  Vector q;
};

struct IntegratorStats {
  long steps = 0;
  long factorizations = 0;
  long newton_corrections = 0;
};

/// Fixed step-size ESDIRK integrator for semi-explicit index-1 DAEs with
/// stage value predictors and iterated IND sensitivities.
///
/// One iteration matrix is built and factorized per step and reused for all
/// implicit stages. Sensitivities differentiate the scheme that was actually
/// executed: the same LU factors, the same number of Newton corrections per
/// stage, and dR/dS re-evaluated at every recorded iterate.
///
/// Instances hold mutable statistics and must not be shared between threads.
class Integrator {
 public:
  explicit Integrator(Method method, NewtonSettings newton = {}, bool use_predictors = true);

  const ButcherTableau& tableau() const { return tableau_; }
  const PredictorCoefficients& predictors() const { return predictors_; }
  const NewtonSettings& newton() const { return newton_; }
  bool uses_predictors() const { return use_predictors_; }

  /// One step from (t, s) with step size h. `prev` enables the stage value
  /// predictors (ignored when its step size differs from h). When `sens` is
  /// given it holds ds_k/dp on entry and ds_{k+1}/dp on exit. A `prev` record
  /// without stage sensitivities makes the predicted guesses constants of p.
  StepResult step(const Model& model, double t, const Vector& s, const Vector& u,
                  const Vector& d, double h, const StepRecord* prev,
                  Sensitivity* sens = nullptr, const Quadrature* quad = nullptr,
                  const Vector* q = nullptr);

  StepResult step_with_sensitivities(const Model& model, double t, const Vector& s,
                                     const Vector& u, const Vector& d, double h,
                                     const StepRecord* prev, SensitivityPair& sens);

  /// `steps` equal steps over [t0, tf]. Errors carry the failing step index.
  Trajectory integrate(const Model& model, double t0, double tf, const Vector& s0,
                       const Vector& u, const Vector& d, int steps,
                       Sensitivity* sens = nullptr, const Quadrature* quad = nullptr);

  const IntegratorStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

 private:
  ButcherTableau tableau_;
  PredictorCoefficients predictors_;
  NewtonSettings newton_;
  bool use_predictors_;
  IntegratorStats stats_;
};

/// Consistency threshold on ||g||_inf for the initial point of an integration.
inline constexpr double kInitialConsistencyTolerance = 1e-6;

}  // namespace sdae::esdirk
