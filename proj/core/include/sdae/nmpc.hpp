#pragma once

#include "sdae/cdekf.hpp"
#include "sdae/model.hpp"
#include "sdae/ocp.hpp"
#include "sdae/sdae_sim.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sdae::nmpc {

/// Piecewise-constant signal given by breakpoints (t_i, v_i): v_i holds on
/// [t_i, t_{i+1}). Before the first breakpoint the first value holds.
class Schedule {
 public:
  Schedule() = default;
  Schedule(std::vector<double> times, std::vector<Vector> values);
  static Schedule constant(const Vector& v) { return Schedule({0.0}, {v}); }

  Vector at(double t) const;
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& values() const { return values_; }
  bool empty() const { return times_.empty(); }

 private:
  std::vector<double> times_;
  std::vector<Vector> values_;
};

struct Scenario {
  std::shared_ptr<const Model> model;  ///< controller and filter model
  Matrix plant_sigma;                  ///< diffusion used by the plant
  Matrix plant_R;                      ///< covariance of the measurement noise actually drawn
  sim::SimConfig sim;
  std::uint64_t seed = 0;

  Vector x0;            ///< true initial differential state
  Vector y_guess;       ///< starting point of the initial consistency solves
  Vector x_hat0;        ///< filter initial state
  Matrix P0;
  Matrix R;             ///< measurement noise covariance assumed by the filter
  ekf::PredictConfig predict;

  ocp::OcpConfig ocp;
  ocp::SqpSettings sqp;
  bool reuse_hessian = true;

  double Ts = 240.0;
  int steps = 60;
  Schedule disturbance;
  Schedule setpoint;
  Vector u_init;        ///< u_{-1}

  void validate() const;
};

struct StepLog {
  int k = 0;
  double t = 0.0;
  Vector x_true, y_true;
  Vector measurement;
  Vector x_pred, y_pred;   ///< prior at t_k
  Matrix P_pred;
  Vector x_filt, y_filt;   ///< posterior at t_k
  Matrix P_filt;
  Vector u;                ///< applied on [t_k, t_k + Ts)
  Vector d;
  Vector zbar;
  Vector z_true;
  int sqp_iterations = 0;
  bool sqp_converged = false;
  double kkt = 0.0;
  double infeasibility = 0.0;
  long newton_corrections = 0;  ///< controller-side stage corrections
};

struct ClosedLoopLog {
  std::vector<StepLog> steps;
  bool failed = false;
  int failed_step = -1;
  std::string error;
};

/// Measure, filter, optimize, apply, advance. Sub-module failures stop the
/// run; the log then holds every completed step plus the diagnostic.
ClosedLoopLog run_closed_loop(const Scenario& scenario);

}  // namespace sdae::nmpc
