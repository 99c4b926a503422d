#include "criteria.hpp"
#include "oracles.hpp"
#include "test_models.hpp"

#include "sdae/errors.hpp"
#include "sdae/esdirk.hpp"

#include <doctest.h>

#include <cmath>

using namespace sdae;
using namespace sdae::esdirk;
using namespace sdae::testing;

namespace {

constexpr Method kAll[] = {Method::ESDIRK12, Method::ESDIRK23, Method::ESDIRK34};

Vector one(double v) { return Vector::Constant(1, v); }

Vector consistent_coupled() {
  const Model m = coupled_model();
  Vector x(2);
  x << 0.5, -0.3;
  return combine(x, solve_consistent_algebraic(m, 0.0, x, one(0.2), one(0.7), one(0.0)));
}

}  // namespace

TEST_CASE("implicit Euler on x' = -x") {
  const Model model = scalar_sde(-1.0, 0.0);
  Integrator integ(Method::ESDIRK12, {1.0, 1e-14, 1e-14, 20});
  Sensitivity sens = SensitivityPair::identity(2, 1).as_sensitivity();
  const Vector s0 = Vector::Ones(2);
  const StepResult r = integ.step(model, 0.0, s0, one(0.0), one(0.0), 0.1, nullptr, &sens);
  CHECK(r.s[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
  CHECK(r.s[1] == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
  CHECK(sens.ds_dp(0, 0) == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
  CHECK(std::abs(sens.ds_dp(0, 1)) < 1e-14);
}

TEST_CASE("one factorization per step") {
  const Model model = coupled_model();
  for (Method m : kAll) {
    Integrator integ(m);
    integ.integrate(model, 0.0, 1.0, consistent_coupled(), one(0.2), one(0.7), 8);
    CHECK(integ.stats().steps == 8);
    CHECK(integ.stats().factorizations == 8);
    CHECK(integ.stats().newton_corrections >= 8 * (make_tableau(m).stages - 1));
  }
}

TEST_CASE("every implicit stage records at least one correction") {
  const Model model = coupled_model();
  Integrator integ(Method::ESDIRK34);
  const Trajectory tr = integ.integrate(model, 0.0, 1.0, consistent_coupled(), one(0.2), one(0.7), 4);
  for (const StepRecord& r : tr.records) {
    CHECK(r.iterates.front() == 0);
    for (std::size_t i = 1; i < r.iterates.size(); ++i) CHECK(r.iterates[i] >= 2);
  }
}

TEST_CASE("stage Newton from a converged guess makes no correction") {
  const Model model = coupled_model();
  const ButcherTableau t = make_tableau(Method::ESDIRK23);
  const Vector s = consistent_coupled();
  const double h = 0.1;
  const IterationMatrix M = build_iteration_matrix(model, t.gamma, h, 0.0, s, one(0.2), one(0.7));
  const Vector psi = s.head(2) + h * t.A(1, 0) * model.f(0.0, s.head(2), s.tail(1), one(0.2), one(0.7));
  const NewtonSettings tight{1.0, 1e-13, 1e-13, 50};
  const StageSolution first =
      newton_solve_stage(model, t, M, psi, h * t.c[1], one(0.2), one(0.7), s, tight);
  CHECK(first.corrections >= 1);
  CHECK(stage_residual(model, t.gamma, h, h * t.c[1], psi, first.value, one(0.2), one(0.7))
            .lpNorm<Eigen::Infinity>() < 1e-12);
  const StageSolution again =
      newton_solve_stage(model, t, M, psi, h * t.c[1], one(0.2), one(0.7), first.value, tight);
  CHECK(again.corrections == 0);
  CHECK(again.iterates.size() == 1);
}

TEST_CASE("Newton divergence is reported") {
  const Model model = reciprocal_dae();
  Integrator integ(Method::ESDIRK23, {0.1, 1e-6, 1e-3, 2});
  Vector s0(2);
  s0 << 1.0, 1.0;
  CHECK_THROWS_AS(integ.integrate(model, 0.0, 40.0, s0, one(0.0), one(0.0), 1), Error);
}

TEST_CASE("inconsistent initial algebraic state is rejected") {
  const Model model = reciprocal_dae();
  Integrator integ(Method::ESDIRK34);
  Vector s0(2);
  s0 << 1.0, 1.5;
  try {
    integ.integrate(model, 0.0, 1.0, s0, one(0.0), one(0.0), 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentInput);
  }
}

TEST_CASE("stage value predictors save Newton corrections") {
  const Model model = coupled_model();
  const NewtonSettings loose{0.1, 1e-6, 1e-3, 20};
  for (Method m : {Method::ESDIRK23, Method::ESDIRK34}) {
    Integrator with(m, loose, true), without(m, loose, false);
    with.integrate(model, 0.0, 2.0, consistent_coupled(), one(0.2), one(0.7), 40);
    without.integrate(model, 0.0, 2.0, consistent_coupled(), one(0.2), one(0.7), 40);
    CHECK(with.stats().newton_corrections <= without.stats().newton_corrections);
  }
}

TEST_CASE("fitted convergence orders") {
  const int expected[] = {1, 2, 3};
  for (int i = 0; i < 3; ++i) {
    const OrderStudy s = order_study(kAll[i]);
    CAPTURE(to_string(kAll[i]));
    CHECK(std::abs(s.order - expected[i]) <= 0.2);
    for (std::size_t k = 1; k < s.error.size(); ++k) CHECK(s.error[k] < s.error[k - 1]);
  }
}

TEST_CASE("sensitivities equal differences of the discrete map") {
  const NewtonSettings newton{0.1, 1e-10, 1e-10, 20};
  for (Method m : kAll) {
    CAPTURE(to_string(m));
    const IndComparison c =
        compare_ind(coupled_model(), m, consistent_coupled(), one(0.2), one(0.7), 0.0, 1.0, 5, newton);
    CHECK(c.error <= 1e-5);
  }
}

TEST_CASE("sensitivities with finite-difference model partials") {
  const NewtonSettings newton{0.1, 1e-10, 1e-10, 20};
  const IndComparison c = compare_ind(coupled_model(false), Method::ESDIRK34, consistent_coupled(), one(0.2),
                                      one(0.7), 0.0, 1.0, 5, newton);
  CHECK(c.error <= 1e-5);
}

TEST_CASE("quadrature rides along the integration") {
  const Model model = scalar_sde(-0.5, 0.0);
  Quadrature q;
  q.size = 1;
  q.q = [](double, const Vector& x, const Vector&, const Vector&, const Vector&) { return Vector(x); };
  Integrator integ(Method::ESDIRK34, {1.0, 1e-13, 1e-13, 20});
  const Trajectory tr = integ.integrate(model, 0.0, 2.0, Vector::Ones(2), one(0.0), one(0.0), 40, nullptr, &q);
  // int_0^2 e^{-t/2} dt = 2 (1 - e^{-1})
  CHECK(tr.q[0] == doctest::Approx(2.0 * (1.0 - std::exp(-1.0))).epsilon(1e-6));
}
