#include "sdae/nmpc.hpp"

#include "sdae/errors.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace sdae::nmpc {

Schedule::Schedule(std::vector<double> times, std::vector<Vector> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty() || times_.size() != values_.size()) {
    fail(ErrorCode::InvalidArgument, "schedule needs matching, non-empty times and values");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) fail(ErrorCode::InvalidArgument, "schedule times must increase");
    if (values_[i].size() != values_[0].size()) fail(ErrorCode::DimensionMismatch, "schedule value sizes differ");
  }
}

Vector Schedule::at(double t) const {
  if (times_.empty()) fail(ErrorCode::InvalidArgument, "empty schedule");
  // Breakpoints are matched with a small tolerance so that t_k = k * Ts hits them.
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  std::size_t i = 0;
  while (i + 1 < times_.size() && times_[i + 1] <= t + tol) ++i;
  return values_[i];
}

void Scenario::validate() const {
  if (!model) fail(ErrorCode::InvalidArgument, "scenario has no model");
  const Dimensions& n = model->dims();
  if (steps < 1) fail(ErrorCode::InvalidArgument, "scenario needs at least one step");
  if (!(Ts > 0.0)) fail(ErrorCode::InvalidArgument, "scenario needs Ts > 0");
  if (std::abs(ocp.Ts - Ts) > 1e-12 * Ts) fail(ErrorCode::InvalidArgument, "OCP interval must equal Ts");
  ocp.validate(n);
  if (x0.size() != n.nx || x_hat0.size() != n.nx) fail(ErrorCode::DimensionMismatch, "scenario initial state size");
  if (P0.rows() != n.nx || P0.cols() != n.nx) fail(ErrorCode::DimensionMismatch, "scenario P0 size");
  if (R.rows() != n.nm || plant_R.rows() != n.nm) fail(ErrorCode::DimensionMismatch, "scenario R size");
  if (plant_sigma.rows() != n.nx) fail(ErrorCode::DimensionMismatch, "scenario plant sigma size");
  if (y_guess.size() != n.ny) fail(ErrorCode::DimensionMismatch, "scenario y_guess size");
  if (u_init.size() != n.nu) fail(ErrorCode::DimensionMismatch, "scenario u_init size");
  if (disturbance.empty() || setpoint.empty()) fail(ErrorCode::InvalidArgument, "scenario schedules are empty");
  if (disturbance.at(0.0).size() != n.nd) fail(ErrorCode::DimensionMismatch, "disturbance size");
  if (setpoint.at(0.0).size() != n.nz) fail(ErrorCode::DimensionMismatch, "setpoint size");
  for (Index i = 0; i < n.nu; ++i) {
    if (u_init[i] < ocp.u_min[i] || u_init[i] > ocp.u_max[i]) {
      fail(ErrorCode::InvalidArgument, "u_init is outside the input bounds");
    }
  }
}

namespace {

Matrix noise_factor(const Matrix& R) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (R + R.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace

ClosedLoopLog run_closed_loop(const Scenario& sc) {
  sc.validate();
  const Model& model = *sc.model;
  const Model plant = model.with_sigma(sc.plant_sigma);
  const Dimensions& n = model.dims();
  const ocp::Layout layout(n, sc.ocp.N);
  const sim::WienerPath path(sc.seed);
  const Matrix noise_L = noise_factor(sc.plant_R);
  esdirk::Integrator filter_integrator(sc.predict.method, sc.predict.newton);

  ClosedLoopLog log;
  const Vector d0 = sc.disturbance.at(0.0);
  Vector s_true;
  ekf::FilterState prior;
  try {
    const Vector y_true0 = solve_consistent_algebraic(model, 0.0, sc.x0, sc.u_init, d0, sc.y_guess);
    s_true = esdirk::combine(sc.x0, y_true0);
    prior.x = sc.x_hat0;
    prior.y = solve_consistent_algebraic(model, 0.0, sc.x_hat0, sc.u_init, d0, y_true0);
    prior.P = sc.P0;
  } catch (const Error& e) {
    log.failed = true;
    log.failed_step = 0;
    log.error = std::string("initialization: ") + e.what();
    return log;
  }

  Vector u_prev = sc.u_init;
  Vector w_prev;
  Matrix H_prev;
  for (int k = 0; k < sc.steps; ++k) {
    StepLog rec;
    rec.k = k;
    rec.t = k * sc.Ts;
    rec.d = sc.disturbance.at(rec.t);
    rec.zbar = sc.setpoint.at(rec.t);
    rec.x_true = s_true.head(n.nx);
    rec.y_true = s_true.tail(n.ny);
    rec.x_pred = prior.x;
    rec.y_pred = prior.y;
    rec.P_pred = prior.P;
    try {
      rec.z_true = model.h(rec.t, rec.x_true, rec.y_true, u_prev, rec.d);
      rec.measurement = model.m(rec.t, rec.x_true, rec.y_true, u_prev, rec.d) +
                        noise_L * path.normal(static_cast<std::uint64_t>(k), n.nm);

      const auto [post, report] =
          ekf::filter_update(model, prior, rec.t, rec.measurement, u_prev, rec.d, sc.R);
      rec.x_filt = post.x;
      rec.y_filt = post.y;
      rec.P_filt = post.P;

      ocp::OcpData data;
      data.t0 = rec.t;
      data.x_init = post.x;
      data.u_prev = u_prev;
      for (int j = 0; j < sc.ocp.N; ++j) data.d.push_back(sc.disturbance.at(rec.t + j * sc.Ts));
      for (int j = 0; j <= sc.ocp.N; ++j) data.zbar.push_back(sc.setpoint.at(rec.t + j * sc.Ts));

      Vector w0;
      Matrix H0;
      if (w_prev.size() == 0) {
        w0 = ocp::replicate_initial(layout, post.x, post.y, u_prev);
      } else {
        w0 = ocp::warm_start_shift(w_prev, layout);
        w0.segment(layout.x(0), n.nx) = post.x;
        w0.segment(layout.y(0), n.ny) = post.y;
        if (sc.reuse_hessian && H_prev.size() > 0) H0 = ocp::shift_hessian(H_prev, layout);
      }

      ocp::SqpResult sol;
      try {
        sol = ocp::sqp_solve(model, w0, data, sc.ocp, sc.sqp, H0.size() > 0 ? &H0 : nullptr);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::LineSearchFailure) throw;
        spdlog::warn("step {}: {}; restarting the OCP from a cold start", k, e.what());
        w0 = ocp::replicate_initial(layout, post.x, post.y, u_prev);
        sol = ocp::sqp_solve(model, w0, data, sc.ocp, sc.sqp, nullptr);
      }
      if (sol.status != ocp::SqpStatus::Converged) {
        spdlog::warn("step {}: SQP did not converge, applying the best iterate", k);
      }
      rec.u = sol.first_input(layout);
      rec.sqp_iterations = sol.iterations;
      rec.sqp_converged = sol.status == ocp::SqpStatus::Converged;
      rec.kkt = sol.kkt;
      rec.infeasibility = sol.infeasibility;
      rec.newton_corrections = sol.newton_corrections;
      w_prev = sol.w;
      H_prev = std::move(sol.hessian);

      const sim::IntervalResult truth =
          sim::simulate_interval(plant, rec.t, s_true, rec.u, rec.d, sc.Ts, sc.sim, path,
                                 static_cast<std::uint64_t>(k));
      s_true = truth.s;

      prior = ekf::predict(model, post, rec.t, rec.u, rec.d, sc.Ts, sc.predict.steps, filter_integrator);
      u_prev = rec.u;
      spdlog::debug("step {}: T = {:.3f}, T_hat = {:.3f}, u = {:.4f}, sqp = {}", k, rec.x_true[0],
                    rec.x_filt[0], rec.u[0], rec.sqp_iterations);
    } catch (const Error& e) {
      log.failed = true;
      log.failed_step = k;
      log.error = "step " + std::to_string(k) + ": " + e.what();
      return log;
    }
    log.steps.push_back(std::move(rec));
  }
  return log;
}

}  // namespace sdae::nmpc
