#pragma once

#include "sdae/model.hpp"

#include <functional>
#include <vector>

namespace sdae::testing {

/// max_ij |a - b| / max(1, |b|).
double relative_error(const Matrix& a, const Matrix& b);

/// Central differences of a vector function, step eps_scale * max(1, |x_j|).
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x,
                   double eps_scale = 1e-6);

double bisect(const std::function<double(double)>& fn, double lo, double hi, double tol = 1e-13);

/// Exact zero-order-hold discretization of x' = A x + B v + G w:
///   Phi = e^{A Ts}, Gamma = int_0^Ts e^{A s} ds B, Q = int_0^Ts e^{A s} G G^T e^{A^T s} ds
/// (Van Loan block exponentials).
struct Discretization {
  Matrix Phi, Gamma, Q;
};
Discretization van_loan(const Matrix& A, const Matrix& B, const Matrix& G, double Ts);

/// Textbook discrete Kalman filter, measurement y_k = C x_k + v_k.
struct KalmanStep {
  Vector x_filt;
  Matrix P_filt;
  Vector x_pred;  ///< prediction to the next sampling instant
  Matrix P_pred;
};
std::vector<KalmanStep> discrete_kalman(const Discretization& dis, const Matrix& C, const Matrix& R,
                                        const Vector& x0, const Matrix& P0,
                                        const std::vector<Vector>& measurements,
                                        const std::vector<Vector>& inputs);

/// Mean and covariance of an index-1 model over [t, t + Ts] by classical RK4
/// on the reduced ODE x' = f(x, y(x)) and the Lyapunov equation
///   P' = A P + P A^T + sigma sigma^T,   A = f_x - f_y g_y^{-1} g_x,
/// with y(x) recovered by an independent Newton iteration.
struct FineStepResult {
  Vector x;
  Matrix P;
};
FineStepResult fine_step_lyapunov(const Model& model, double t, const Vector& x0, const Vector& y_guess,
                                  const Matrix& P0, const Vector& u, const Vector& d, double Ts,
                                  int steps);

/// Solves [H B^T; B 0] [dw; lambda] = [-g; -b].
struct KktSolution {
  Vector step;
  Vector multipliers;
};
KktSolution dense_kkt(const Matrix& H, const Vector& g, const Matrix& B, const Vector& b);

/// Least-squares slope of log(err) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace sdae::testing
