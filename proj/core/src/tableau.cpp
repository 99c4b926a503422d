#include "sdae/tableau.hpp"

#include "sdae/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace sdae::esdirk {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ESDIRK12: return "ESDIRK12";
    case Method::ESDIRK23: return "ESDIRK23";
    case Method::ESDIRK34: return "ESDIRK34";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "esdirk12") return Method::ESDIRK12;
  if (lower == "esdirk23") return Method::ESDIRK23;
  if (lower == "esdirk34") return Method::ESDIRK34;
  fail(ErrorCode::InvalidArgument, "unknown integration method '" + std::string(text) + "'");
}

namespace {

Vector embedded_weights(const Vector& c, int order) {
  // Quadrature weights exact for polynomials up to degree order-1.
  const Index s = c.size();
  Matrix vandermonde(order, s);
  Vector moments(order);
  for (int q = 0; q < order; ++q) {
    for (Index j = 0; j < s; ++j) vandermonde(q, j) = std::pow(c[j], q);
    moments[q] = 1.0 / (q + 1);
  }
  return vandermonde.fullPivLu().solve(moments);
}

ButcherTableau esdirk12() {
  ButcherTableau t;
  t.method = Method::ESDIRK12;
  t.stages = 2;
  t.gamma = 1.0;
  t.A = Matrix::Zero(2, 2);
  t.A(1, 1) = 1.0;
  t.b = t.A.row(1).transpose();
  t.b_hat = Vector::Constant(2, 0.5);
  t.c = Vector(2);
  t.c << 0.0, 1.0;
  t.order = 1;
  t.embedded_order = 2;
  return t;
}

ButcherTableau esdirk23() {
  ButcherTableau t;
  t.method = Method::ESDIRK23;
  t.stages = 3;
  const double g = 1.0 - 1.0 / std::sqrt(2.0);
  const double b1 = (1.0 - g) / 2.0;
  t.gamma = g;
  t.A = Matrix::Zero(3, 3);
  t.A(1, 0) = g;
  t.A(1, 1) = g;
  t.A(2, 0) = b1;
  t.A(2, 1) = b1;
  t.A(2, 2) = g;
  t.b = t.A.row(2).transpose();
  t.c = Vector(3);
  t.c << 0.0, 2.0 * g, 1.0;
  t.b_hat = Vector(3);
  t.b_hat << (6.0 * g - 1.0) / (12.0 * g), 1.0 / (12.0 * g * (1.0 - 2.0 * g)),
      (1.0 - 3.0 * g) / (3.0 * (1.0 - 2.0 * g));
  t.order = 2;
  t.embedded_order = 3;
  return t;
}

// gamma of the L-stable third-order SDIRK family: root of
// g^3 - 3 g^2 + 3/2 g - 1/6 near 0.4359.
double esdirk34_gamma() {
  double g = 0.4358665215;
  for (int it = 0; it < 50; ++it) {
    const double p = ((g - 3.0) * g + 1.5) * g - 1.0 / 6.0;
    const double dp = (3.0 * g - 6.0) * g + 1.5;
    const double step = p / dp;
    g -= step;
    if (std::abs(step) < 1e-17) break;
  }
  return g;
}

// Stage-order-2 ESDIRK34 for a given c3; returns b_hat' * delta, the one
// fourth-order condition not implied by stage order 2 and quadrature.
struct Esdirk34Candidate {
  Matrix A;
  Vector c;
  Vector b_hat;
  double defect = 0.0;
};

Esdirk34Candidate esdirk34_candidate(double g, double c3) {
  Esdirk34Candidate out;
  const double c2 = 2.0 * g;
  const double a32 = (0.5 * c3 * c3 - g * c3) / c2;
  const double a31 = c3 - a32 - g;

  Eigen::Matrix2d m;
  m << c2, c3, c2 * c2, c3 * c3;
  const Eigen::Vector2d rhs(0.5 - g, 1.0 / 3.0 - g);
  const Eigen::Vector2d b23 = m.fullPivLu().solve(rhs);
  const double b1 = 1.0 - b23[0] - b23[1] - g;

  out.A = Matrix::Zero(4, 4);
  out.A(1, 0) = g;
  out.A(1, 1) = g;
  out.A(2, 0) = a31;
  out.A(2, 1) = a32;
  out.A(2, 2) = g;
  out.A(3, 0) = b1;
  out.A(3, 1) = b23[0];
  out.A(3, 2) = b23[1];
  out.A(3, 3) = g;
  out.c = Vector(4);
  out.c << 0.0, c2, c3, 1.0;
  out.b_hat = embedded_weights(out.c, 4);

  const Vector c_sq = out.c.array().square();
  const Vector delta = out.A * c_sq - (out.c.array().cube() / 3.0).matrix();
  out.defect = out.b_hat.dot(delta);
  return out;
}

ButcherTableau esdirk34() {
  const double g = esdirk34_gamma();
  double lo = 0.4;
  double hi = 0.5;
  double f_lo = esdirk34_candidate(g, lo).defect;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = esdirk34_candidate(g, mid).defect;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  const Esdirk34Candidate best = esdirk34_candidate(g, 0.5 * (lo + hi));

  ButcherTableau t;
  t.method = Method::ESDIRK34;
  t.stages = 4;
  t.gamma = g;
  t.A = best.A;
  t.b = t.A.row(3).transpose();
  t.c = best.c;
  t.b_hat = best.b_hat;
  t.order = 3;
  t.embedded_order = 4;
  return t;
}

}  // namespace

ButcherTableau make_tableau(Method method) {
  switch (method) {
    case Method::ESDIRK12: return esdirk12();
    case Method::ESDIRK23: return esdirk23();
    case Method::ESDIRK34: return esdirk34();
  }
  fail(ErrorCode::InvalidArgument, "unknown method");
}

std::vector<double> order_condition_residuals(const Vector& w, const Matrix& A, const Vector& c,
                                              int max_order) {
  std::vector<double> out;
  const Vector c2 = c.array().square();
  const Vector c3 = c.array().cube();
  const Vector ac = A * c;
  const auto worst = [](std::initializer_list<double> values) {
    double r = 0.0;
    for (double v : values) r = std::max(r, std::abs(v));
    return r;
  };
  if (max_order >= 1) out.push_back(worst({w.sum() - 1.0}));
  if (max_order >= 2) out.push_back(worst({w.dot(c) - 0.5}));
  if (max_order >= 3) out.push_back(worst({w.dot(c2) - 1.0 / 3.0, w.dot(ac) - 1.0 / 6.0}));
  if (max_order >= 4) {
    out.push_back(worst({w.dot(c3) - 0.25, w.dot(c.cwiseProduct(ac)) - 1.0 / 8.0,
                         w.dot(A * c2) - 1.0 / 12.0, w.dot(A * ac) - 1.0 / 24.0}));
  }
  return out;
}

PredictorCoefficients trivial_predictor(const ButcherTableau& tableau) {
  const Index n = tableau.stages - 1;
  PredictorCoefficients p;
  p.alpha = Vector::Zero(n);
  p.beta = Matrix::Zero(n, n);
  p.beta.col(n - 1).setOnes();
  p.trivial = true;
  return p;
}

PredictorCoefficients compute_predictor_coefficients(const ButcherTableau& tableau, double r) {
  if (!(r > 0.0)) fail(ErrorCode::InvalidArgument, "predictor step ratio must be positive");
  const Index n = tableau.stages - 1;

  // Times in units of the previous step, origin at t_k: s_{k-1} sits at -1,
  // previous stage j at c_j - 1, and new stage i at r * c_i.
  Vector nodes(n + 1);
  nodes[0] = -1.0;
  for (Index j = 1; j <= n; ++j) nodes[j] = tableau.c[j] - 1.0;

  Matrix vandermonde(n + 1, n + 1);
  for (Index q = 0; q <= n; ++q) {
    for (Index j = 0; j <= n; ++j) vandermonde(q, j) = std::pow(nodes[j], static_cast<double>(q));
  }
  const Eigen::FullPivLU<Matrix> lu(vandermonde);
  if (!lu.isInvertible()) {
    spdlog::warn("{}: predictor order conditions are singular, using the trivial predictor",
                 to_string(tableau.method));
    return trivial_predictor(tableau);
  }

  PredictorCoefficients p;
  p.alpha = Vector(n);
  p.beta = Matrix(n, n);
  for (Index i = 0; i < n; ++i) {
    const double target = r * tableau.c[i + 1];
    Vector rhs(n + 1);
    for (Index q = 0; q <= n; ++q) rhs[q] = std::pow(target, static_cast<double>(q));
    const Vector weights = lu.solve(rhs);
    p.alpha[i] = weights[0];
    p.beta.row(i) = weights.tail(n).transpose();
  }
  return p;
}

}  // namespace sdae::esdirk
