#include "sdae/model.hpp"

#include "sdae/errors.hpp"
#include "sdae/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace sdae {

namespace {

void check_size(const Vector& v, Index expected, const std::string& what) {
  if (v.size() != expected) {
    fail(ErrorCode::DimensionMismatch, what + ": expected length " + std::to_string(expected) +
                                           ", got " + std::to_string(v.size()));
  }
}

MatrixFunction fd_fallback(const VectorFunction& fn, Argument wrt) {
  return [fn, wrt](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return finite_difference_partial(fn, wrt, Point{t, x, y, u, d});
  };
}

void fill(MatrixFunction& partial, const VectorFunction& fn, Argument wrt) {
  if (!partial && fn) partial = fd_fallback(fn, wrt);
}

}  // namespace

Model::Model(ModelFunctions functions) : fn_(std::move(functions)) {
  const Dimensions& n = fn_.dims;
  if (!fn_.f || !fn_.g) fail(ErrorCode::InvalidArgument, "model '" + fn_.name + "' needs f and g");
  if (n.nx < 0 || n.ny < 0 || n.nu < 0 || n.nd < 0) {
    fail(ErrorCode::InvalidArgument, "model '" + fn_.name + "' has negative dimensions");
  }
  if (fn_.sigma.size() == 0) {
    fn_.sigma = Matrix::Zero(n.nx, n.nw);
  }
  if (fn_.sigma.rows() != n.nx || fn_.sigma.cols() != n.nw) {
    fail(ErrorCode::DimensionMismatch, "model '" + fn_.name + "': sigma must be nx x nw");
  }

  fill(fn_.df_dx, fn_.f, Argument::X);
  fill(fn_.df_dy, fn_.f, Argument::Y);
  fill(fn_.df_du, fn_.f, Argument::U);
  fill(fn_.dg_dx, fn_.g, Argument::X);
  fill(fn_.dg_dy, fn_.g, Argument::Y);
  fill(fn_.dg_du, fn_.g, Argument::U);
  fill(fn_.dm_dx, fn_.m, Argument::X);
  fill(fn_.dm_dy, fn_.m, Argument::Y);
  fill(fn_.dh_dx, fn_.h, Argument::X);
  fill(fn_.dh_dy, fn_.h, Argument::Y);
  fill(fn_.dh_du, fn_.h, Argument::U);
}

Model Model::with_sigma(const Matrix& sigma) const {
  ModelFunctions copy = fn_;
  copy.sigma = sigma;
  copy.dims.nw = sigma.cols();
  return Model(std::move(copy));
}

Jacobians Model::jacobians(const Point& p) const {
  Jacobians j;
  j.df_dx = df_dx(p.t, p.x, p.y, p.u, p.d);
  j.df_dy = df_dy(p.t, p.x, p.y, p.u, p.d);
  j.df_du = df_du(p.t, p.x, p.y, p.u, p.d);
  j.dg_dx = dg_dx(p.t, p.x, p.y, p.u, p.d);
  j.dg_dy = dg_dy(p.t, p.x, p.y, p.u, p.d);
  j.dg_du = dg_du(p.t, p.x, p.y, p.u, p.d);
  if (has_measurement()) {
    j.dm_dx = dm_dx(p.t, p.x, p.y, p.u, p.d);
    j.dm_dy = dm_dy(p.t, p.x, p.y, p.u, p.d);
  }
  if (has_output()) {
    j.dh_dx = dh_dx(p.t, p.x, p.y, p.u, p.d);
    j.dh_dy = dh_dy(p.t, p.x, p.y, p.u, p.d);
    j.dh_du = dh_du(p.t, p.x, p.y, p.u, p.d);
  }
  return j;
}

Matrix finite_difference_partial(const VectorFunction& fn, Argument wrt, const Point& p) {
  const double step_base = std::cbrt(std::numeric_limits<double>::epsilon());
  Point q = p;
  Vector& v = wrt == Argument::X ? q.x : wrt == Argument::Y ? q.y : q.u;
  const Vector& v0 = wrt == Argument::X ? p.x : wrt == Argument::Y ? p.y : p.u;

  const Vector f0 = fn(p.t, p.x, p.y, p.u, p.d);
  if (!f0.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "finite differences: base point");
  Matrix jac(f0.size(), v0.size());
  for (Index j = 0; j < v0.size(); ++j) {
    const double delta = step_base * std::max(1.0, std::abs(v0[j]));
    v[j] = v0[j] + delta;
    const Vector plus = fn(q.t, q.x, q.y, q.u, q.d);
    v[j] = v0[j] - delta;
    const Vector minus = fn(q.t, q.x, q.y, q.u, q.d);
    v[j] = v0[j];
    if (!plus.allFinite() || !minus.allFinite()) {
      fail(ErrorCode::NonFiniteEvaluation,
           "finite differences: perturbed evaluation in column " + std::to_string(j));
    }
    jac.col(j) = (plus - minus) / (2.0 * delta);
  }
  return jac;
}

Jacobians finite_difference_jacobians(const Model& model, const Point& p) {
  const ModelFunctions& fn = model.functions();
  Jacobians j;
  j.df_dx = finite_difference_partial(fn.f, Argument::X, p);
  j.df_dy = finite_difference_partial(fn.f, Argument::Y, p);
  j.df_du = finite_difference_partial(fn.f, Argument::U, p);
  j.dg_dx = finite_difference_partial(fn.g, Argument::X, p);
  j.dg_dy = finite_difference_partial(fn.g, Argument::Y, p);
  j.dg_du = finite_difference_partial(fn.g, Argument::U, p);
  if (fn.m) {
    j.dm_dx = finite_difference_partial(fn.m, Argument::X, p);
    j.dm_dy = finite_difference_partial(fn.m, Argument::Y, p);
  }
  if (fn.h) {
    j.dh_dx = finite_difference_partial(fn.h, Argument::X, p);
    j.dh_dy = finite_difference_partial(fn.h, Argument::Y, p);
    j.dh_du = finite_difference_partial(fn.h, Argument::U, p);
  }
  return j;
}

Vector solve_consistent_algebraic(const Model& model, double t, const Vector& x, const Vector& u,
                                  const Vector& d, const Vector& y_guess,
                                  const ConsistencySettings& settings) {
  const Dimensions& n = model.dims();
  check_size(x, n.nx, "x");
  check_size(u, n.nu, "u");
  check_size(d, n.nd, "d");
  check_size(y_guess, n.ny, "y_guess");
  if (!y_guess.allFinite()) fail(ErrorCode::InvalidArgument, "consistency solve: non-finite guess");

  const double roundoff = 4.0 * std::numeric_limits<double>::epsilon();
  Vector y = y_guess;
  for (int it = 0; it <= settings.max_iterations; ++it) {
    const Vector res = model.g(t, x, y, u, d);
    if (!res.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "consistency solve: g is not finite");
    if (res.lpNorm<Eigen::Infinity>() <= settings.tolerance) return y;
    if (it == settings.max_iterations) break;

    const LuFactor lu(model.dg_dy(t, x, y, u, d), "dg/dy");
    const Vector step = lu.solve(res);
    y -= step;
    bool negligible = true;
    for (Index j = 0; j < y.size(); ++j) {
      if (std::abs(step[j]) > roundoff * std::max(1.0, std::abs(y[j]))) negligible = false;
    }
    if (negligible) return y;
  }
  fail(ErrorCode::NoConvergence, "consistency solve did not converge in " +
                                     std::to_string(settings.max_iterations) + " iterations");
}

Matrix algebraic_sensitivity(const Model& model, const Point& p) {
  const LuFactor lu(model.dg_dy(p.t, p.x, p.y, p.u, p.d), "dg/dy");
  return -lu.solve(Matrix(model.dg_dx(p.t, p.x, p.y, p.u, p.d)));
}

}  // namespace sdae
