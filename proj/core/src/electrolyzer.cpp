#include "sdae/electrolyzer.hpp"

#include "sdae/errors.hpp"

#include <cmath>

namespace sdae::electrolyzer {

void Params::validate() const {
  const double positive[] = {heat_capacity, lye_cp, cells, u_tn, transfer_area, h_c, u_rev, area, r1, s};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "electrolyzer parameters must be positive");
  }
  if (!std::isfinite(r2) || !std::isfinite(t1) || !std::isfinite(t2) || !std::isfinite(t3)) {
    fail(ErrorCode::InvalidArgument, "electrolyzer coefficients must be finite");
  }
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "electrolyzer sigma must be non-negative");
}

Params read_params(const kv::Document& doc) {
  Params p;
  p.heat_capacity = doc.number("electrolyzer.heat_capacity");
  p.lye_cp = doc.number("electrolyzer.lye_cp");
  p.cells = doc.number("electrolyzer.cells");
  p.u_tn = doc.number("electrolyzer.u_tn");
  p.transfer_area = doc.number("electrolyzer.transfer_area");
  p.h_c = doc.number("electrolyzer.h_c");
  p.u_rev = doc.number("electrolyzer.u_rev");
  p.area = doc.number("electrolyzer.area");
  p.r1 = doc.number("electrolyzer.r1");
  p.r2 = doc.number("electrolyzer.r2");
  p.s = doc.number("electrolyzer.s");
  p.t1 = doc.number("electrolyzer.t1");
  p.t2 = doc.number("electrolyzer.t2");
  p.t3 = doc.number("electrolyzer.t3");
  p.sigma = doc.number("electrolyzer.sigma", p.sigma);
  p.validate();
  return p;
}

Params load_params(const std::filesystem::path& path) {
  const kv::Document doc = kv::Document::load(path);
  const Params p = read_params(doc);
  doc.check_all_used();
  return p;
}

namespace {

double activation_coefficient(const Params& p, double T) { return p.t1 + p.t2 / T + p.t3 / (T * T); }
double activation_coefficient_dT(const Params& p, double T) {
  return -p.t2 / (T * T) - 2.0 * p.t3 / (T * T * T);
}

double log_argument(const Params& p, double T, double I) {
  const double arg = activation_coefficient(p, T) * I / p.area + 1.0;
  if (!(arg > 0.0)) {
    fail(ErrorCode::DomainError, "activation log argument is not positive (T = " + std::to_string(T) +
                                     ", I = " + std::to_string(I) + ")");
  }
  return arg;
}

}  // namespace

double ohmic_voltage(const Params& p, double T, double I) { return (p.r1 + p.r2 * T) * I / p.area; }

double activation_voltage(const Params& p, double T, double I) {
  return p.s * std::log(log_argument(p, T, I));
}

double polarization_voltage(const Params& p, double T, double I) {
  return p.u_rev + ohmic_voltage(p, T, I) + activation_voltage(p, T, I);
}

HeatFlows heat_flows(const Params& p, const Vector& x, const Vector& y, const Vector& u,
                     const Vector& d) {
  HeatFlows q;
  q.lye = u[0] * p.lye_cp * (x[1] - x[0]);
  q.heating = p.cells * (y[0] - p.u_tn) * y[1];
  q.ambient = -p.transfer_area * p.h_c * (x[0] - d[0]);
  return q;
}

Model make_model(const Params& p) {
  p.validate();
  ModelFunctions fn;
  fn.name = "electrolyzer";
  fn.dims = Dimensions{2, 2, 1, 2, 1, 1, 1};
  fn.sigma = Matrix::Zero(2, 1);
  fn.sigma(1, 0) = p.sigma;

  fn.f = [p](double, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    const HeatFlows q = heat_flows(p, x, y, u, d);
    Vector out(2);
    out << (q.lye + q.heating + q.ambient) / p.heat_capacity, 0.0;
    return out;
  };
  fn.g = [p](double, const Vector& x, const Vector& y, const Vector&, const Vector& d) {
    Vector out(2);
    out << y[0] - polarization_voltage(p, x[0], y[1]), d[1] - p.cells * y[0] * y[1];
    return out;
  };
  fn.m = [](double, const Vector& x, const Vector&, const Vector&, const Vector&) {
    return Vector(x.head(1));
  };
  fn.h = fn.m;

  fn.df_dx = [p](double, const Vector&, const Vector&, const Vector& u, const Vector&) {
    Matrix J = Matrix::Zero(2, 2);
    J(0, 0) = (-u[0] * p.lye_cp - p.transfer_area * p.h_c) / p.heat_capacity;
    J(0, 1) = u[0] * p.lye_cp / p.heat_capacity;
    return J;
  };
  fn.df_dy = [p](double, const Vector&, const Vector& y, const Vector&, const Vector&) {
    Matrix J = Matrix::Zero(2, 2);
    J(0, 0) = p.cells * y[1] / p.heat_capacity;
    J(0, 1) = p.cells * (y[0] - p.u_tn) / p.heat_capacity;
    return J;
  };
  fn.df_du = [p](double, const Vector& x, const Vector&, const Vector&, const Vector&) {
    Matrix J = Matrix::Zero(2, 1);
    J(0, 0) = p.lye_cp * (x[1] - x[0]) / p.heat_capacity;
    return J;
  };
  fn.dg_dx = [p](double, const Vector& x, const Vector& y, const Vector&, const Vector&) {
    const double T = x[0];
    const double I = y[1];
    const double L = log_argument(p, T, I);
    Matrix J = Matrix::Zero(2, 2);
    J(0, 0) = -(p.r2 * I / p.area + p.s * activation_coefficient_dT(p, T) * I / (p.area * L));
    return J;
  };
  fn.dg_dy = [p](double, const Vector& x, const Vector& y, const Vector&, const Vector&) {
    const double T = x[0];
    const double I = y[1];
    const double L = log_argument(p, T, I);
    Matrix J(2, 2);
    J(0, 0) = 1.0;
    J(0, 1) = -((p.r1 + p.r2 * T) / p.area + p.s * activation_coefficient(p, T) / (p.area * L));
    J(1, 0) = -p.cells * y[1];
    J(1, 1) = -p.cells * y[0];
    return J;
  };
  fn.dg_du = [](double, const Vector&, const Vector&, const Vector&, const Vector&) {
    return Matrix(Matrix::Zero(2, 1));
  };
  fn.dm_dx = [](double, const Vector&, const Vector&, const Vector&, const Vector&) {
    Matrix J = Matrix::Zero(1, 2);
    J(0, 0) = 1.0;
    return J;
  };
  fn.dm_dy = [](double, const Vector&, const Vector&, const Vector&, const Vector&) {
    return Matrix(Matrix::Zero(1, 2));
  };
  fn.dh_dx = fn.dm_dx;
  fn.dh_dy = fn.dm_dy;
  fn.dh_du = [](double, const Vector&, const Vector&, const Vector&, const Vector&) {
    return Matrix(Matrix::Zero(1, 1));
  };
  return Model(std::move(fn));
}

Vector algebraic_guess(const Params& p, double P_in) {
  Vector y(2);
  y << 1.8, P_in / (p.cells * 1.8);
  return y;
}

}  // namespace sdae::electrolyzer
