#include "sdae/esdirk.hpp"

#include "sdae/errors.hpp"

#include <cmath>
#include <string>

namespace sdae::esdirk {

namespace {

struct StageJacobians {
  Matrix fx, fy, fu, gx, gy, gu;
};

StageJacobians stage_jacobians(const Model& model, double T, const Vector& S, Index nx,
                               const Vector& u, const Vector& d, bool with_g) {
  const Index ny = S.size() - nx;
  const Vector x = S.head(nx);
  const Vector y = S.tail(ny);
  StageJacobians j;
  j.fx = model.df_dx(T, x, y, u, d);
  j.fy = model.df_dy(T, x, y, u, d);
  j.fu = model.df_du(T, x, y, u, d);
  if (with_g) {
    j.gx = model.dg_dx(T, x, y, u, d);
    j.gy = model.dg_dy(T, x, y, u, d);
    j.gu = model.dg_du(T, x, y, u, d);
  }
  return j;
}

// d f(T, S, u) / dp for stage sensitivities dS/dp.
Matrix f_sensitivity(const StageJacobians& j, const Matrix& dS, Index nx, const Matrix& du) {
  const Index ny = dS.rows() - nx;
  Matrix out = j.fx * dS.topRows(nx) + j.fu * du;
  if (ny > 0) out.noalias() += j.fy * dS.bottomRows(ny);
  return out;
}

MatrixFunction or_fd(const MatrixFunction& partial, const VectorFunction& fn, Argument wrt) {
  if (partial) return partial;
  return [fn, wrt](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return finite_difference_partial(fn, wrt, Point{t, x, y, u, d});
  };
}

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

IterationMatrix build_iteration_matrix(const Model& model, double gamma, double h, double t,
                                       const Vector& s, const Vector& u, const Vector& d) {
  const Dimensions& n = model.dims();
  const Vector x = s.head(n.nx);
  const Vector y = s.tail(n.ny);
  Matrix M(n.ns(), n.ns());
  const double hg = h * gamma;
  M.topLeftCorner(n.nx, n.nx) = Matrix::Identity(n.nx, n.nx) - hg * model.df_dx(t, x, y, u, d);
  M.topRightCorner(n.nx, n.ny) = -hg * model.df_dy(t, x, y, u, d);
  M.bottomLeftCorner(n.ny, n.nx) = -model.dg_dx(t, x, y, u, d);
  M.bottomRightCorner(n.ny, n.ny) = -model.dg_dy(t, x, y, u, d);
  return IterationMatrix{LuFactor(M, "ESDIRK iteration matrix"), h, t, s};
}

Vector stage_residual(const Model& model, double gamma, double h, double T, const Vector& psi,
                      const Vector& S, const Vector& u, const Vector& d) {
  const Dimensions& n = model.dims();
  const Vector x = S.head(n.nx);
  const Vector y = S.tail(n.ny);
  Vector r(n.ns());
  r.head(n.nx) = x - h * gamma * model.f(T, x, y, u, d) - psi;
  r.tail(n.ny) = -model.g(T, x, y, u, d);
  return r;
}

StageSolution newton_solve_stage(const Model& model, const ButcherTableau& tableau,
                                 const IterationMatrix& M, const Vector& psi, double T,
                                 const Vector& u, const Vector& d, const Vector& guess,
                                 const NewtonSettings& settings, int min_corrections) {
  if (!guess.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "stage guess is not finite");
  StageSolution out;
  Vector S = guess;
  for (int l = 0;; ++l) {
    const Vector r = stage_residual(model, tableau.gamma, M.h, T, psi, S, u, d);
    if (!r.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "stage residual is not finite");
    out.iterates.push_back(S);
    if (l >= min_corrections && settings.scaled_norm(r, S) < settings.tau) break;
    if (l == settings.max_iterations) {
      fail(ErrorCode::NoConvergence, "stage Newton iteration hit " +
                                         std::to_string(settings.max_iterations) + " corrections");
    }
    S -= M.lu.solve(r);
    ++out.corrections;
  }
  out.value = std::move(S);
  return out;
}

SensitivityPair SensitivityPair::identity(Index ns, Index nu) {
  return SensitivityPair{Matrix::Identity(ns, ns), Matrix::Zero(ns, nu)};
}

Sensitivity SensitivityPair::as_sensitivity() const {
  const Index ns = ds_ds0.rows();
  const Index nu = ds_du.cols();
  Sensitivity s;
  s.ds_dp.resize(ns, ns + nu);
  s.ds_dp << ds_ds0, ds_du;
  s.du_dp = Matrix::Zero(nu, ns + nu);
  s.du_dp.rightCols(nu).setIdentity();
  return s;
}

SensitivityPair SensitivityPair::from_sensitivity(const Sensitivity& s, Index ns) {
  return SensitivityPair{s.ds_dp.leftCols(ns), s.ds_dp.rightCols(s.ds_dp.cols() - ns)};
}

Integrator::Integrator(Method method, NewtonSettings newton, bool use_predictors)
    : tableau_(make_tableau(method)),
      predictors_(compute_predictor_coefficients(tableau_, 1.0)),
      newton_(newton),
      use_predictors_(use_predictors) {
  if (!(newton_.tau > 0.0)) fail(ErrorCode::InvalidArgument, "Newton tau must be positive");
}

StepResult Integrator::step(const Model& model, double t, const Vector& s, const Vector& u,
                            const Vector& d, double h, const StepRecord* prev, Sensitivity* sens,
                            const Quadrature* quad, const Vector* q) {
  const Dimensions& n = model.dims();
  const ButcherTableau& tab = tableau_;
  const int stages = tab.stages;
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "step size must be positive");
  if (s.size() != n.ns() || u.size() != n.nu || d.size() != n.nd) {
    fail(ErrorCode::DimensionMismatch, "ESDIRK step: state, input or disturbance size");
  }
  if (prev == nullptr) {
    const Vector g0 = model.g(t, s.head(n.nx), s.tail(n.ny), u, d);
    if (!(g0.lpNorm<Eigen::Infinity>() <= kInitialConsistencyTolerance)) {
      fail(ErrorCode::InconsistentInput,
           "initial point violates g = 0 (||g|| = " + std::to_string(g0.lpNorm<Eigen::Infinity>()) + ")");
    }
  }

  const bool predict = use_predictors_ && prev != nullptr && !predictors_.trivial &&
                       same_step(prev->h, h) && static_cast<int>(prev->stages.size()) == stages;

  StepResult result;
  StepRecord& rec = result.record;
  rec.t = t;
  rec.h = h;
  rec.s_start = s;
  rec.stages.resize(stages);
  rec.iterates.assign(stages, 0);
  rec.used_predictor = predict;

  const IterationMatrix M = build_iteration_matrix(model, tab.gamma, h, t, s, u, d);
  ++stats_.factorizations;
  ++stats_.steps;

  const Vector xk = s.head(n.nx);
  std::vector<Vector> F(stages);
  std::vector<double> T(stages);
  for (int i = 0; i < stages; ++i) T[i] = t + tab.c[i] * h;

  // Sensitivity bookkeeping.
  const bool with_sens = sens != nullptr;
  std::vector<Matrix> dS(with_sens ? stages : 0);
  std::vector<Matrix> dF(with_sens ? stages : 0);
  Matrix du;
  if (with_sens) {
    if (sens->ds_dp.rows() != n.ns() || sens->du_dp.rows() != n.nu ||
        sens->du_dp.cols() != sens->ds_dp.cols()) {
      fail(ErrorCode::DimensionMismatch, "sensitivity seed has the wrong shape");
    }
    if (predict && !prev->stage_sens.empty() && prev->stage_sens.front().cols() != sens->ds_dp.cols()) {
      fail(ErrorCode::DimensionMismatch, "previous record was built with a different seed");
    }
    du = sens->du_dp;
    rec.start_sens = sens->ds_dp;
  }

  rec.stages[0] = s;
  F[0] = model.f(T[0], xk, s.tail(n.ny), u, d);
  if (with_sens) {
    dS[0] = sens->ds_dp;
    const StageJacobians j0 = stage_jacobians(model, T[0], s, n.nx, u, d, false);
    dF[0] = f_sensitivity(j0, dS[0], n.nx, du);
  }

  const double hg = h * tab.gamma;
  for (int i = 1; i < stages; ++i) {
    Vector psi = xk;
    for (int j = 0; j < i; ++j) psi.noalias() += h * tab.A(i, j) * F[j];

    Vector guess;
    if (predict) {
      guess = predictors_.alpha[i - 1] * prev->s_start;
      for (int j = 1; j < stages; ++j) guess.noalias() += predictors_.beta(i - 1, j - 1) * prev->stages[j];
    } else {
      guess = s;
    }

    const StageSolution sol = newton_solve_stage(model, tab, M, psi, T[i], u, d, guess, newton_, 1);
    stats_.newton_corrections += sol.corrections;
    rec.iterates[i] = sol.corrections + 1;
    rec.stages[i] = sol.value;
    F[i] = model.f(T[i], sol.value.head(n.nx), sol.value.tail(n.ny), u, d);

    if (with_sens) {
      Matrix dpsi = dS[0].topRows(n.nx);
      for (int j = 0; j < i; ++j) dpsi.noalias() += h * tab.A(i, j) * dF[j];

      Matrix dSi;
      if (predict && prev->stage_sens.empty()) {
        dSi = Matrix::Zero(n.ns(), dS[0].cols());
      } else if (predict) {
        dSi = predictors_.alpha[i - 1] * prev->start_sens;
        for (int j = 1; j < stages; ++j) dSi.noalias() += predictors_.beta(i - 1, j - 1) * prev->stage_sens[j];
      } else {
        dSi = dS[0];
      }

      // Differentiate every executed correction S <- S - M^{-1} R(S).
      for (int l = 0; l < sol.corrections; ++l) {
        const StageJacobians jl = stage_jacobians(model, T[i], sol.iterates[l], n.nx, u, d, true);
        Matrix dR(n.ns(), dSi.cols());
        const auto dX = dSi.topRows(n.nx);
        const auto dY = dSi.bottomRows(n.ny);
        dR.topRows(n.nx) = dX - hg * (jl.fx * dX + jl.fu * du) - dpsi;
        dR.bottomRows(n.ny) = -(jl.gx * dX + jl.gu * du);
        if (n.ny > 0) {
          dR.topRows(n.nx).noalias() -= hg * jl.fy * dY;
          dR.bottomRows(n.ny).noalias() -= jl.gy * dY;
        }
        dSi -= M.lu.solve(dR);
      }
      const StageJacobians ji = stage_jacobians(model, T[i], sol.value, n.nx, u, d, false);
      dF[i] = f_sensitivity(ji, dSi, n.nx, du);
      dS[i] = std::move(dSi);
    }
  }

  result.s = rec.stages[stages - 1];

  Vector x_hat = xk;
  for (int i = 0; i < stages; ++i) x_hat.noalias() += h * tab.b_hat[i] * F[i];
  rec.error_estimate = result.s.head(n.nx) - x_hat;

  if (quad != nullptr) {
    if (q == nullptr || q->size() != quad->size) {
      fail(ErrorCode::DimensionMismatch, "quadrature state has the wrong size");
    }
    result.q = *q;
    for (int i = 0; i < stages; ++i) {
      const Vector& Si = rec.stages[i];
      result.q.noalias() += h * tab.b[i] * quad->q(T[i], Si.head(n.nx), Si.tail(n.ny), u, d);
    }
    if (with_sens) {
      const MatrixFunction qx = or_fd(quad->dq_dx, quad->q, Argument::X);
      const MatrixFunction qy = or_fd(quad->dq_dy, quad->q, Argument::Y);
      const MatrixFunction qu = or_fd(quad->dq_du, quad->q, Argument::U);
      if (sens->dq_dp.size() == 0) sens->dq_dp = Matrix::Zero(quad->size, du.cols());
      for (int i = 0; i < stages; ++i) {
        if (tab.b[i] == 0.0) continue;
        const Vector& Si = rec.stages[i];
        const Vector xi = Si.head(n.nx);
        const Vector yi = Si.tail(n.ny);
        Matrix dq = qx(T[i], xi, yi, u, d) * dS[i].topRows(n.nx) + qu(T[i], xi, yi, u, d) * du;
        if (n.ny > 0) dq.noalias() += qy(T[i], xi, yi, u, d) * dS[i].bottomRows(n.ny);
        sens->dq_dp.noalias() += h * tab.b[i] * dq;
      }
    }
  }

  if (with_sens) {
    sens->ds_dp = dS[stages - 1];
    rec.stage_sens = std::move(dS);
  }
  return result;
}

StepResult Integrator::step_with_sensitivities(const Model& model, double t, const Vector& s,
                                               const Vector& u, const Vector& d, double h,
                                               const StepRecord* prev, SensitivityPair& sens) {
  Sensitivity seeded = sens.as_sensitivity();
  StepResult out = step(model, t, s, u, d, h, prev, &seeded);
  sens = SensitivityPair::from_sensitivity(seeded, model.dims().ns());
  return out;
}

Trajectory Integrator::integrate(const Model& model, double t0, double tf, const Vector& s0,
                                 const Vector& u, const Vector& d, int steps, Sensitivity* sens,
                                 const Quadrature* quad) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "integrate needs at least one step");
  if (!(tf > t0)) fail(ErrorCode::InvalidArgument, "integrate needs tf > t0");
  const double h = (tf - t0) / steps;

  Trajectory traj;
  traj.t.reserve(steps + 1);
  traj.s.reserve(steps + 1);
  traj.records.reserve(steps);
  traj.t.push_back(t0);
  traj.s.push_back(s0);
  if (quad != nullptr) traj.q = Vector::Zero(quad->size);
  if (sens != nullptr && quad != nullptr && sens->dq_dp.size() == 0) {
    sens->dq_dp = Matrix::Zero(quad->size, sens->du_dp.cols());
  }

  for (int k = 0; k < steps; ++k) {
    const double tk = k + 1 == steps ? tf - h : t0 + k * h;
    const StepRecord* prev = k == 0 ? nullptr : &traj.records.back();
    StepResult res;
    try {
      res = step(model, tk, traj.s.back(), u, d, h, prev, sens, quad,
                 quad != nullptr ? &traj.q : nullptr);
    } catch (const Error& e) {
      throw Error(e.code(), "integration step " + std::to_string(k) + " at t = " +
                                std::to_string(tk) + ": " + e.what());
    }
    traj.t.push_back(k + 1 == steps ? tf : t0 + (k + 1) * h);
    traj.s.push_back(std::move(res.s));
    if (quad != nullptr) traj.q = std::move(res.q);
    traj.records.push_back(std::move(res.record));
  }
  return traj;
}

}  // namespace sdae::esdirk
