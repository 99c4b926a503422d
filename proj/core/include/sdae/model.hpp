#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace sdae {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Sizes of one semi-explicit SDAE system
///   dx = f(t, x, y, u, d) dt + sigma dw,   0 = g(t, x, y, u, d),
///   y_m = m(t, x, y, u, d) + v,            z = h(t, x, y, u, d).
struct Dimensions {
  Index nx = 0;  ///< differential states
  Index ny = 0;  ///< algebraic states
  Index nu = 0;  ///< inputs
  Index nd = 0;  ///< disturbances
  Index nm = 0;  ///< measurements
  Index nz = 0;  ///< controlled outputs
  Index nw = 0;  ///< Wiener process dimension (columns of sigma)

  Index ns() const { return nx + ny; }
};

using VectorFunction = std::function<Vector(double t, const Vector& x, const Vector& y,
                                            const Vector& u, const Vector& d)>;
using MatrixFunction = std::function<Matrix(double t, const Vector& x, const Vector& y,
                                            const Vector& u, const Vector& d)>;

/// User-supplied model. f and g are mandatory; m and h may be left empty when
/// the model is only integrated. Any empty partial is replaced by a central
/// finite-difference approximation when the Model is constructed.
struct ModelFunctions {
  std::string name;
  Dimensions dims;

  VectorFunction f, g, m, h;

  MatrixFunction df_dx, df_dy, df_du;
  MatrixFunction dg_dx, dg_dy, dg_du;
  MatrixFunction dm_dx, dm_dy;
  MatrixFunction dh_dx, dh_dy, dh_du;

  Matrix sigma;  ///< nx x nw, constant
};

/// An evaluation point (t, x, y, u, d). When produced by a consistency solve it
/// satisfies ||g||_inf <= the consistency tolerance.
struct Point {
  double t = 0.0;
  Vector x, y, u, d;
};

/// All partial derivatives of one model at one point.
struct Jacobians {
  Matrix df_dx, df_dy, df_du;
  Matrix dg_dx, dg_dy, dg_du;
  Matrix dm_dx, dm_dy;
  Matrix dh_dx, dh_dy, dh_du;
};

/// Validated, immutable model. Evaluations are pure, so one Model may be shared
/// by concurrent callers.
class Model {
 public:
  explicit Model(ModelFunctions functions);

  const std::string& name() const { return fn_.name; }
  const Dimensions& dims() const { return fn_.dims; }
  const Matrix& sigma() const { return fn_.sigma; }
  bool has_measurement() const { return static_cast<bool>(fn_.m); }
  bool has_output() const { return static_cast<bool>(fn_.h); }

  /// Copy of this model with a different (constant) diffusion matrix.
  Model with_sigma(const Matrix& sigma) const;

  const ModelFunctions& functions() const { return fn_; }

  Vector f(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.f(t, x, y, u, d); }
  Vector g(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.g(t, x, y, u, d); }
  Vector m(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.m(t, x, y, u, d); }
  Vector h(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.h(t, x, y, u, d); }

  Matrix df_dx(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.df_dx(t, x, y, u, d); }
  Matrix df_dy(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.df_dy(t, x, y, u, d); }
  Matrix df_du(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.df_du(t, x, y, u, d); }
  Matrix dg_dx(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dg_dx(t, x, y, u, d); }
  Matrix dg_dy(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dg_dy(t, x, y, u, d); }
  Matrix dg_du(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dg_du(t, x, y, u, d); }
  Matrix dm_dx(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dm_dx(t, x, y, u, d); }
  Matrix dm_dy(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dm_dy(t, x, y, u, d); }
  Matrix dh_dx(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dh_dx(t, x, y, u, d); }
  Matrix dh_dy(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dh_dy(t, x, y, u, d); }
  Matrix dh_du(double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) const { return fn_.dh_du(t, x, y, u, d); }

  Vector f(const Point& p) const { return f(p.t, p.x, p.y, p.u, p.d); }
  Vector g(const Point& p) const { return g(p.t, p.x, p.y, p.u, p.d); }

  /// Partials as supplied (analytic or finite-difference fallback).
  Jacobians jacobians(const Point& p) const;

 private:
  ModelFunctions fn_;
};

/// Which argument of a model function a partial is taken with respect to.
enum class Argument { X, Y, U };

/// Central-difference partial of `fn` with respect to one argument, with
/// per-column step eps^(1/3) * max(1, |v_j|). Throws NonFiniteEvaluation.
Matrix finite_difference_partial(const VectorFunction& fn, Argument wrt, const Point& p);

/// Every partial of the model by central differences, ignoring any analytic
/// partials the model carries.
Jacobians finite_difference_jacobians(const Model& model, const Point& p);

struct ConsistencySettings {
  double tolerance = 1e-10;
  int max_iterations = 50;
};

/// Exact Newton on g(t, x, y, u, d) = 0 for y. Also accepts an iterate whose
/// Newton correction has fallen to round-off level, which is what limits
/// models whose constraint rows carry large physical magnitudes.
Vector solve_consistent_algebraic(const Model& model, double t, const Vector& x, const Vector& u,
                                  const Vector& d, const Vector& y_guess,
                                  const ConsistencySettings& settings = {});

/// dy/dx along the constraint manifold: solves (dg/dy) Y = -dg/dx.
Matrix algebraic_sensitivity(const Model& model, const Point& p);

}  // namespace sdae
