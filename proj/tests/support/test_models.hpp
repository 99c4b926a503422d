#pragma once

#include "sdae/model.hpp"

namespace sdae::testing {

/// x' = -y, 0 = y + y^3 - x^2 - x^6. The constraint forces y = x^2, so
/// x(t) = x0 / (1 + x0 t).
Model reciprocal_dae();
double reciprocal_exact_x(double x0, double t);

/// Linear SDAE with nx = 2, ny = 1, nu = 1, nd = 1:
///   x' = A x + b y + e u + k d,   0 = c^T x - y,
///   m = h = x_1, sigma diagonal.
struct LinearSystem {
  Matrix A;   ///< 2x2
  Vector b;   ///< 2
  Vector e;   ///< 2
  Vector k;   ///< 2
  Vector c;   ///< 2
  Matrix sigma;
  /// Reduced drift A + b c^T.
  Matrix reduced() const;
};
LinearSystem default_linear_system();
Model linear_model(const LinearSystem& sys, bool analytic_partials = true);

/// Mildly nonlinear model exercising every partial:
///   x0' = -x0 + y0 * x1 + u0,  x1' = sin(x0) - 0.5 x1 + d0 * u0,
///   0 = y0 + 0.1 y0^3 - x0 * x1 - u0,
///   m = h = x0 + y0.
Model coupled_model(bool analytic_partials = true);

/// Scalar dx = a x dt + s dw with the trivial constraint 0 = y - x.
Model scalar_sde(double a, double s);

}  // namespace sdae::testing
