#include "oracles.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace sdae::testing {

double relative_error(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("relative_error: shapes differ");
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(b(i, j))));
    }
  }
  return worst;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x, double eps_scale) {
  const Vector f0 = fn(x);
  Matrix J(f0.size(), x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double h = eps_scale * std::max(1.0, std::abs(x[j]));
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return J;
}

double bisect(const std::function<double(double)>& fn, double lo, double hi, double tol) {
  double flo = fn(lo);
  if (flo * fn(hi) > 0.0) throw std::invalid_argument("bisect: no sign change");
  while (hi - lo > tol * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    const double fm = fn(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Discretization van_loan(const Matrix& A, const Matrix& B, const Matrix& G, double Ts) {
  const Index n = A.rows();
  const Index m = B.cols();
  Discretization out;

  Matrix M1 = Matrix::Zero(n + m, n + m);
  M1.topLeftCorner(n, n) = A;
  M1.topRightCorner(n, m) = B;
  const Matrix E1 = (M1 * Ts).exp();
  out.Phi = E1.topLeftCorner(n, n);
  out.Gamma = E1.topRightCorner(n, m);

  Matrix M2 = Matrix::Zero(2 * n, 2 * n);
  M2.topLeftCorner(n, n) = -A;
  M2.topRightCorner(n, n) = G * G.transpose();
  M2.bottomRightCorner(n, n) = A.transpose();
  const Matrix E2 = (M2 * Ts).exp();
  const Matrix PhiT = E2.bottomRightCorner(n, n);
  out.Q = PhiT.transpose() * E2.topRightCorner(n, n);
  out.Q = 0.5 * (out.Q + out.Q.transpose()).eval();
  return out;
}

std::vector<KalmanStep> discrete_kalman(const Discretization& dis, const Matrix& C, const Matrix& R,
                                        const Vector& x0, const Matrix& P0,
                                        const std::vector<Vector>& measurements,
                                        const std::vector<Vector>& inputs) {
  std::vector<KalmanStep> out;
  Vector x = x0;
  Matrix P = P0;
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    KalmanStep s;
    const Matrix S = C * P * C.transpose() + R;
    const Matrix K = P * C.transpose() * S.inverse();
    s.x_filt = x + K * (measurements[k] - C * x);
    const Matrix IKC = Matrix::Identity(P.rows(), P.cols()) - K * C;
    s.P_filt = IKC * P * IKC.transpose() + K * R * K.transpose();
    s.x_pred = dis.Phi * s.x_filt + dis.Gamma * inputs[k];
    s.P_pred = dis.Phi * s.P_filt * dis.Phi.transpose() + dis.Q;
    x = s.x_pred;
    P = s.P_pred;
    out.push_back(s);
  }
  return out;
}

namespace {

Vector newton_y(const Model& model, double t, const Vector& x, Vector y, const Vector& u, const Vector& d) {
  for (int it = 0; it < 100; ++it) {
    const Vector r = model.g(t, x, y, u, d);
    const Vector dy = model.dg_dy(t, x, y, u, d).fullPivLu().solve(r);
    y -= dy;
    if (dy.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, y.lpNorm<Eigen::Infinity>())) return y;
  }
  throw std::runtime_error("fine_step_lyapunov: algebraic Newton did not converge");
}

}  // namespace

FineStepResult fine_step_lyapunov(const Model& model, double t, const Vector& x0, const Vector& y_guess,
                                  const Matrix& P0, const Vector& u, const Vector& d, double Ts,
                                  int steps) {
  const Matrix SS = model.sigma() * model.sigma().transpose();
  Vector y = y_guess;

  // Combined right-hand side on (x, vec P).
  auto rhs = [&](double tt, const Vector& x, const Matrix& P, Vector& dx, Matrix& dP) {
    y = newton_y(model, tt, x, y, u, d);
    dx = model.f(tt, x, y, u, d);
    const Matrix gy_inv = model.dg_dy(tt, x, y, u, d).inverse();
    const Matrix A = model.df_dx(tt, x, y, u, d) -
                     model.df_dy(tt, x, y, u, d) * gy_inv * model.dg_dx(tt, x, y, u, d);
    dP = A * P + P * A.transpose() + SS;
  };

  const double h = Ts / steps;
  Vector x = x0;
  Matrix P = P0;
  Vector k1, k2, k3, k4;
  Matrix l1, l2, l3, l4;
  for (int n = 0; n < steps; ++n) {
    const double tn = t + n * h;
    rhs(tn, x, P, k1, l1);
    rhs(tn + 0.5 * h, x + 0.5 * h * k1, P + 0.5 * h * l1, k2, l2);
    rhs(tn + 0.5 * h, x + 0.5 * h * k2, P + 0.5 * h * l2, k3, l3);
    rhs(tn + h, x + h * k3, P + h * l3, k4, l4);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    P += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  return {x, P};
}

KktSolution dense_kkt(const Matrix& H, const Vector& g, const Matrix& B, const Vector& b) {
  const Index n = H.rows();
  const Index m = B.rows();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, m) = B.transpose();
  K.bottomLeftCorner(m, n) = B;
  Vector rhs(n + m);
  rhs << -g, -b;
  const Vector sol = K.fullPivLu().solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::log(h[i]);
    const double b = std::log(err[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace sdae::testing
