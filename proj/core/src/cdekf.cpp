#include "sdae/cdekf.hpp"

#include "sdae/errors.hpp"

#include <Eigen/Cholesky>

namespace sdae::ekf {

Matrix symmetrize(const Matrix& P) { return 0.5 * (P + P.transpose()); }

namespace {

Vector consistent_y(const Model& model, double t, const Vector& x, const Vector& u,
                    const Vector& d, const Vector& guess) {
  try {
    return solve_consistent_algebraic(model, t, x, u, d, guess);
  } catch (const Error& e) {
    throw Error(ErrorCode::AlgebraicNoConvergence, e.what());
  }
}

}  // namespace

std::pair<FilterState, UpdateReport> filter_update(const Model& model, const FilterState& prior,
                                                   double t, const Vector& measurement,
                                                   const Vector& u_prev, const Vector& d,
                                                   const Matrix& R) {
  const Dimensions& n = model.dims();
  if (!model.has_measurement()) fail(ErrorCode::InvalidArgument, "model has no measurement function");
  if (prior.x.size() != n.nx || prior.y.size() != n.ny || prior.P.rows() != n.nx ||
      prior.P.cols() != n.nx || measurement.size() != n.nm || R.rows() != n.nm || R.cols() != n.nm) {
    fail(ErrorCode::DimensionMismatch, "filter update: state, covariance or measurement size");
  }

  const Point p{t, prior.x, prior.y, u_prev, d};
  UpdateReport rep;
  rep.innovation = measurement - model.m(t, prior.x, prior.y, u_prev, d);
  const Matrix dy_dx = algebraic_sensitivity(model, p);
  rep.C = model.dm_dx(t, prior.x, prior.y, u_prev, d);
  if (n.ny > 0) rep.C.noalias() += model.dm_dy(t, prior.x, prior.y, u_prev, d) * dy_dx;

  rep.innovation_covariance = symmetrize(rep.C * prior.P * rep.C.transpose() + R);
  const Eigen::LLT<Matrix> llt(rep.innovation_covariance);
  if (llt.info() != Eigen::Success || !rep.innovation_covariance.allFinite()) {
    fail(ErrorCode::SingularInnovationCovariance, "innovation covariance is not positive definite");
  }
  // K = P C^T Re^{-1}, via Re K^T = C P.
  rep.gain = llt.solve(rep.C * prior.P).transpose();

  FilterState post;
  post.x = prior.x + rep.gain * rep.innovation;
  const Matrix IKC = Matrix::Identity(n.nx, n.nx) - rep.gain * rep.C;
  post.P = symmetrize(IKC * prior.P * IKC.transpose() + rep.gain * R * rep.gain.transpose());
  post.y = consistent_y(model, t, post.x, u_prev, d, prior.y);
  return {std::move(post), std::move(rep)};
}

FilterState predict(const Model& model, const FilterState& state, double t, const Vector& u,
                    const Vector& d, double Ts, const PredictConfig& config) {
  esdirk::Integrator integrator(config.method, config.newton);
  return predict(model, state, t, u, d, Ts, config.steps, integrator);
}

FilterState predict(const Model& model, const FilterState& state, double t, const Vector& u,
                    const Vector& d, double Ts, int steps, esdirk::Integrator& integrator) {
  const Dimensions& n = model.dims();
  if (steps < 1) fail(ErrorCode::InvalidArgument, "prediction needs at least one step");
  if (!(Ts > 0.0)) fail(ErrorCode::InvalidArgument, "prediction needs Ts > 0");
  if (state.x.size() != n.nx || state.y.size() != n.ny || state.P.rows() != n.nx) {
    fail(ErrorCode::DimensionMismatch, "prediction: state or covariance size");
  }

  const double h = Ts / steps;
  const Matrix SS = model.sigma() * model.sigma().transpose();
  Vector s = esdirk::combine(state.x, state.y);
  Matrix P = state.P;
  esdirk::StepRecord prev;
  for (int k = 0; k < steps; ++k) {
    const double tk = t + k * h;
    esdirk::Sensitivity sens;
    sens.ds_dp.resize(n.ns(), n.nx);
    sens.ds_dp.topRows(n.nx).setIdentity();
    if (n.ny > 0) {
      sens.ds_dp.bottomRows(n.ny) = algebraic_sensitivity(model, Point{tk, s.head(n.nx), s.tail(n.ny), u, d});
    }
    sens.du_dp = Matrix::Zero(n.nu, n.nx);

    esdirk::StepResult res;
    try {
      res = integrator.step(model, tk, s, u, d, h, k == 0 ? nullptr : &prev, &sens);
    } catch (const Error& e) {
      throw Error(e.code(), "prediction step " + std::to_string(k) + ": " + e.what());
    }
    const Matrix A = sens.ds_dp.topRows(n.nx);
    P = symmetrize(A * P * A.transpose() + 0.5 * h * (A * SS * A.transpose() + SS));
    s = std::move(res.s);
    prev = std::move(res.record);
    // Sensitivities restart every step, so the next guesses are plain data.
    prev.stage_sens.clear();
    prev.start_sens.resize(0, 0);
  }

  FilterState out;
  out.x = s.head(n.nx);
  out.y = consistent_y(model, t + Ts, out.x, u, d, s.tail(n.ny));
  out.P = std::move(P);
  return out;
}

}  // namespace sdae::ekf
