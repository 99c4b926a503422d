#pragma once

#include "sdae/key_value.hpp"
#include "sdae/model.hpp"

#include <filesystem>

namespace sdae::electrolyzer {

/// Stack parameters. Temperatures in degC, including the T that appears in
/// the 1/T and 1/T^2 activation terms.
struct Params {
  double heat_capacity = 0.0;  ///< C_p,el, J/K
  double lye_cp = 0.0;         ///< c_P,lye, J/(kg K)
  double cells = 0.0;          ///< n_c
  double u_tn = 0.0;           ///< thermoneutral voltage, V
  double transfer_area = 0.0;  ///< A_s, m^2
  double h_c = 0.0;            ///< W/(m^2 K)
  double u_rev = 0.0;          ///< V
  double area = 0.0;           ///< electrode area A, m^2
  double r1 = 0.0, r2 = 0.0;   ///< ohm m^2, ohm m^2 / degC
  double s = 0.0;              ///< V (natural logarithm)
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;  ///< m^2/A, m^2 degC/A, m^2 degC^2/A
  double sigma = 0.03;         ///< inlet temperature diffusion, degC/sqrt(s)

  void validate() const;
};

/// Reads the [electrolyzer] section. load_params also rejects unknown keys.
Params read_params(const kv::Document& doc);
Params load_params(const std::filesystem::path& path);

double ohmic_voltage(const Params& p, double T, double I);
double activation_voltage(const Params& p, double T, double I);
/// U_rev + U_ohm + U_act.
double polarization_voltage(const Params& p, double T, double I);

/// Addends of C_p,el dT/dt: lye cooling, electrical heating, ambient loss (W).
struct HeatFlows {
  double lye = 0.0;
  double heating = 0.0;
  double ambient = 0.0;
};
HeatFlows heat_flows(const Params& p, const Vector& x, const Vector& y, const Vector& u,
                     const Vector& d);

/// x = [T, T_in], y = [U_cell, I], u = [f_in], d = [T_amb, P_in],
/// m = h = T, sigma = [0; sigma].
Model make_model(const Params& p);

/// Starting guess for the algebraic states at power P_in.
Vector algebraic_guess(const Params& p, double P_in);

}  // namespace sdae::electrolyzer
