#include "criteria.hpp"
#include "oracles.hpp"

#include "sdae/electrolyzer.hpp"
#include "sdae/errors.hpp"
#include "sdae/key_value.hpp"

#include <doctest.h>

using namespace sdae;
using namespace sdae::electrolyzer;
using namespace sdae::testing;

namespace {

Params params() { return load_params(source_dir() / "data" / "electrolyzer.cfg"); }

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("current from the power balance matches bisection") {
  const Params p = params();
  const Model model = make_model(p);
  for (double T : {50.0, 65.0, 80.0}) {
    for (double P : {0.8e6, 2.0e6}) {
      const Vector y = solve_consistent_algebraic(model, 0.0, v2(T, 40.0), Vector::Constant(1, 3.0),
                                                  v2(25.0, P), algebraic_guess(p, P));
      const double I = bisect([&](double i) { return p.cells * polarization_voltage(p, T, i) * i - P; }, 1.0, 1e5);
      CHECK(y[1] == doctest::Approx(I).epsilon(1e-9));
      CHECK(y[0] == doctest::Approx(polarization_voltage(p, T, I)).epsilon(1e-9));
    }
  }
}

TEST_CASE("polarization voltage grows with current and falls with temperature") {
  const Params p = params();
  CHECK(polarization_voltage(p, 70.0, 5000.0) > polarization_voltage(p, 70.0, 3000.0));
  CHECK(polarization_voltage(p, 80.0, 4000.0) < polarization_voltage(p, 60.0, 4000.0));
  CHECK(polarization_voltage(p, 70.0, 4000.0) > p.u_tn);
  CHECK(polarization_voltage(p, 70.0, 4000.0) ==
        doctest::Approx(p.u_rev + ohmic_voltage(p, 70.0, 4000.0) + activation_voltage(p, 70.0, 4000.0)));
}

TEST_CASE("heat flow signs") {
  const Params p = params();
  const HeatFlows q = heat_flows(p, v2(70.0, 40.0), v2(1.9, 4500.0), Vector::Constant(1, 3.0), v2(25.0, 2e6));
  CHECK(q.lye < 0.0);
  CHECK(q.heating > 0.0);
  CHECK(q.ambient < 0.0);
  const HeatFlows cold = heat_flows(p, v2(20.0, 40.0), v2(1.9, 4500.0), Vector::Constant(1, 3.0), v2(25.0, 2e6));
  CHECK(cold.lye > 0.0);
  CHECK(cold.ambient > 0.0);
}

TEST_CASE("analytic partials agree with finite differences") {
  const Params p = params();
  const Model model = make_model(p);
  Point pt{0.0, v2(68.0, 42.0), v2(1.9, 4500.0), Vector::Constant(1, 4.0), v2(25.0, 2e6)};
  const Jacobians a = model.jacobians(pt);
  const Jacobians fd = finite_difference_jacobians(model, pt);
  CHECK(relative_error(a.df_dx, fd.df_dx) < 1e-8);
  CHECK(relative_error(a.df_dy, fd.df_dy) < 1e-8);
  CHECK(relative_error(a.df_du, fd.df_du) < 1e-8);
  CHECK(relative_error(a.dg_dx, fd.dg_dx) < 1e-6);
  CHECK(relative_error(a.dg_dy, fd.dg_dy) < 1e-6);
}

TEST_CASE("parameter file is validated") {
  CHECK_THROWS_AS(read_params(kv::Document::parse("[electrolyzer]\nheat_capacity = 1\n")), Error);
  const std::string text = "[electrolyzer]\nheat_capacity = -5e6\nlye_cp = 3100\ncells = 230\nu_tn = 1.482\n"
                           "transfer_area = 20\nh_c = 15\nu_rev = 1.229\narea = 2.6\nr1 = 8e-5\nr2 = 0\n"
                           "s = 0.08\nt1 = 0.1\nt2 = 8\nt3 = 247\n";
  CHECK_THROWS_AS(read_params(kv::Document::parse(text)), Error);
}
