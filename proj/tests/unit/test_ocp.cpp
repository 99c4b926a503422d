#include "criteria.hpp"
#include "test_models.hpp"

#include "sdae/electrolyzer.hpp"
#include "sdae/errors.hpp"
#include "sdae/ocp.hpp"

#include <doctest.h>

#include <cmath>

using namespace sdae;
using namespace sdae::ocp;
using namespace sdae::testing;

TEST_CASE("layout indexing") {
  const Layout L(Dimensions{2, 2, 1, 2, 1, 1, 1}, 3);
  CHECK(L.size() == 3 * 5 + 2);
  CHECK(L.constraints() == 2 + 3 * 4);
  CHECK(L.x(1) == 5);
  CHECK(L.y(1) == 7);
  CHECK(L.u(1) == 9);
  CHECK(L.x(3) == 15);
  const qp::Partition p = L.partition();
  CHECK(p.kept.size() == 3);
  CHECK(p.eliminated.size() == 14);
}

TEST_CASE("pack and unpack round trip") {
  const Layout L(Dimensions{2, 1, 1, 1, 1, 1, 0}, 2);
  Vector w = Vector::LinSpaced(L.size(), 1.0, static_cast<double>(L.size()));
  std::vector<Vector> x, y, u;
  L.unpack(w, x, y, u);
  CHECK(x.size() == 3);
  CHECK(y.size() == 2);
  CHECK(u.size() == 2);
  CHECK(L.pack(x, y, u) == w);
}

TEST_CASE("warm start shift with two intervals") {
  const Layout L(Dimensions{1, 1, 1, 1, 1, 1, 0}, 2);
  // w = (x0, y0, u0, x1, y1, u1, x2)
  Vector w(7);
  w << 10, 20, 30, 11, 21, 31, 12;
  const Vector s = warm_start_shift(w, L);
  Vector expected(7);
  expected << 11, 21, 31, 12, 21, 31, 12;
  CHECK(s == expected);
}

TEST_CASE("Hessian shift follows the inputs and stays positive definite") {
  const Layout L(Dimensions{1, 1, 1, 1, 1, 1, 0}, 3);
  Matrix H(3, 3);
  H << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  const Matrix S = shift_hessian(H, L);
  CHECK(S(0, 0) == 3.0);
  CHECK(S(0, 1) == 0.2);
  CHECK(S(1, 1) == 2.0);
  CHECK(S(2, 2) == 2.0);
  CHECK(S(0, 2) == 0.0);
  CHECK(S(1, 2) == 0.0);
  CHECK(S.llt().info() == Eigen::Success);
}

TEST_CASE("relaxation function") {
  CHECK(relaxation(10.0, 10.0, 20.0, 1.0) == 1.0);
  CHECK(relaxation(20.0, 10.0, 20.0, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(relaxation(15.0, 10.0, 20.0, 3.0) == doctest::Approx(std::exp(-1.5)));
}

TEST_CASE("relaxed and unrelaxed shooting agree at a consistent node") {
  const RelaxationCheck r = relaxation_vanishing();
  CHECK(r.endpoint_difference <= 1e-12);
  CHECK(r.p_at_start == 1.0);
}

TEST_CASE("relaxation lets an inconsistent node be integrated") {
  const electrolyzer::Params prm = electrolyzer::load_params(source_dir() / "data" / "electrolyzer.cfg");
  const Model stack = electrolyzer::make_model(prm);
  Vector x(2), d(2);
  x << 70.0, 40.0;
  d << 25.0, 2.0e6;
  const Vector u = Vector::Constant(1, 3.1);
  Vector y = solve_consistent_algebraic(stack, 0.0, x, u, d, electrolyzer::algebraic_guess(prm, 2.0e6));
  y[1] *= 1.01;
  OcpConfig cfg;
  cfg.u_min = Vector::Constant(1, 2.0);
  cfg.u_max = Vector::Constant(1, 10.0);
  cfg.Qz = Matrix::Constant(1, 1, 10.0);
  cfg.Qdu = Matrix::Constant(1, 1, 0.1);
  const ShootResult r = shoot_interval(stack, x, y, u, d, 0.0, 240.0, Vector::Constant(1, 75.0), cfg, true);
  CHECK(r.endpoint.allFinite());
  // The relaxed constraint at t_{j+1} keeps e^{-eta} of the initial residual.
  const Vector g0 = stack.g(0.0, x, y, u, d);
  const Vector g1 = stack.g(240.0, r.endpoint.head(2), r.endpoint.tail(2), u, d);
  CHECK(g1[1] == doctest::Approx(std::exp(-1.0) * g0[1]).epsilon(1e-6));
}

TEST_CASE("NLP derivatives at random points") {
  const GradientCheck g = electrolyzer_gradient_check(3, 3);
  CHECK(g.points == 3);
  CHECK(g.grad_error <= 1e-5);
  CHECK(g.jac_error <= 1e-5);
}

TEST_CASE("SQP solves a linear-quadratic problem like a dense KKT system") {
  const LqCheck lq = lq_sqp_check();
  CHECK(lq.converged);
  CHECK(lq.iterations <= 3);
  CHECK(lq.error <= 1e-6);
}

TEST_CASE("full-space Hessian places the move penalty on the inputs") {
  const Layout L(Dimensions{1, 1, 1, 1, 1, 1, 0}, 2);
  OcpConfig cfg;
  cfg.N = 2;
  cfg.Ts = 2.0;
  cfg.Qdu = Matrix::Constant(1, 1, 4.0);
  const Matrix H = full_space_hessian(L, cfg, Matrix::Zero(2, 2));
  CHECK(H.rows() == L.size());
  // 1/2 (u0 - u_prev)^2 Qdu/Ts + 1/2 (u1 - u0)^2 Qdu/Ts
  CHECK(H(L.u(0), L.u(0)) == doctest::Approx(4.0));
  CHECK(H(L.u(0), L.u(1)) == doctest::Approx(-2.0));
  CHECK(H(L.u(1), L.u(1)) == doctest::Approx(2.0));
  CHECK(H(L.x(0), L.x(0)) == 0.0);
}

TEST_CASE("configuration is validated") {
  OcpConfig cfg;
  cfg.u_min = Vector::Constant(1, 3.0);
  cfg.u_max = Vector::Constant(1, 2.0);
  cfg.Qz = Matrix::Identity(1, 1);
  cfg.Qdu = Matrix::Identity(1, 1);
  CHECK_THROWS_AS(cfg.validate(Dimensions{2, 2, 1, 2, 1, 1, 1}), Error);
}
