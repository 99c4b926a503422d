#pragma once

#include "sdae/model.hpp"

#include <string_view>

namespace sdae::esdirk {

enum class Method { ESDIRK12, ESDIRK23, ESDIRK34 };

std::string_view to_string(Method method);
/// Accepts "esdirk12", "ESDIRK23", ... Throws InvalidArgument.
Method parse_method(std::string_view text);

/// Stiffly accurate ESDIRK tableau: explicit first stage, diagonal gamma on
/// stages 2..s, last row of A equal to b (so c_s = 1).
struct ButcherTableau {
  Method method = Method::ESDIRK12;
  int stages = 0;
  Matrix A;
  Vector b;
  Vector b_hat;  ///< embedded weights, one order higher than b
  Vector c;
  double gamma = 0.0;
  int order = 0;           ///< order of the advancing method
  int embedded_order = 0;  ///< order of the embedded method
};

/// Coefficients are derived in closed form from the structure (a21 = gamma,
/// b = last row of A) and the order conditions. ESDIRK34 additionally needs a
/// scalar root solve for c3 so that the embedded weights reach order 4.
ButcherTableau make_tableau(Method method);

/// Residuals of the rooted-tree order conditions for weights w on (A, c), up
/// to order 4. Entry k holds the largest |residual| among trees of order k+1.
std::vector<double> order_condition_residuals(const Vector& weights, const Matrix& A,
                                              const Vector& c, int max_order);

/// Stage value predictor for implicit stages i = 2..s:
///   S_i^[0] = alpha_i s_{k-1} + sum_{j=2..s} beta_ij S_hat_j,
/// where S_hat_j are last step's converged stages and S_hat_s = s_k.
/// Row i-2 of beta belongs to stage i.
struct PredictorCoefficients {
  Vector alpha;
  Matrix beta;
  bool trivial = false;  ///< S_i^[0] = s_k
};

/// Polynomial extrapolation through the s data points of the previous step,
/// exact for polynomials of degree s-1. Falls back to the trivial predictor
/// (with a logged warning) when the interpolation nodes are singular.
PredictorCoefficients compute_predictor_coefficients(const ButcherTableau& tableau, double r);

PredictorCoefficients trivial_predictor(const ButcherTableau& tableau);

}  // namespace sdae::esdirk
