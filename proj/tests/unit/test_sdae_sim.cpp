#include "criteria.hpp"
#include "test_models.hpp"

#include "sdae/sdae_sim.hpp"

#include <doctest.h>

#include <cmath>

using namespace sdae;
using namespace sdae::sim;
using namespace sdae::testing;

TEST_CASE("Wiener increments are reproducible per interval") {
  const WienerPath a(11), b(11), c(12);
  CHECK(a.increment(3, 7, 2, 0.1) == b.increment(3, 7, 2, 0.1));
  CHECK(a.increment(3, 7, 2, 0.1) != c.increment(3, 7, 2, 0.1));
  CHECK(a.increment(3, 7, 2, 0.1) != a.increment(3, 8, 2, 0.1));
  CHECK(a.normal(3, 1) != a.increment(3, 0, 1, 1.0));
}

TEST_CASE("increment variance scales with dt") {
  const WienerPath p(5);
  double sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum2 += std::pow(p.increment(0, i, 1, 0.25)[0], 2);
  CHECK(sum2 / n == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("deterministic step is implicit Euler") {
  const Model model = scalar_sde(-2.0, 0.0);
  const Vector s = implicit_explicit_step(model, 0.0, Vector::Ones(2), Vector::Zero(1), Vector::Zero(1), 0.1,
                                          Vector::Zero(1));
  CHECK(s[0] == doctest::Approx(1.0 / 1.2).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(s[0]).epsilon(1e-12));
}

TEST_CASE("noise enters additively and the constraint holds") {
  const Model model = scalar_sde(0.0, 0.5);
  Vector dw(1);
  dw << 0.3;
  const Vector s = implicit_explicit_step(model, 0.0, Vector::Ones(2), Vector::Zero(1), Vector::Zero(1), 0.1, dw);
  CHECK(s[0] == doctest::Approx(1.15).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(1.15).epsilon(1e-12));
}

TEST_CASE("an interval is reproducible from its index") {
  const Model model = scalar_sde(-1.0, 0.5);
  const WienerPath path(99);
  const SimConfig cfg;
  const IntervalResult a = simulate_interval(model, 4.0, Vector::Ones(2), Vector::Zero(1), Vector::Zero(1), 1.0, cfg, path, 4);
  const IntervalResult b = simulate_interval(model, 4.0, Vector::Ones(2), Vector::Zero(1), Vector::Zero(1), 1.0, cfg, path, 4);
  CHECK(a.s == b.s);
  CHECK(a.inner.size() == static_cast<std::size_t>(cfg.steps + 1));
}

TEST_CASE("Monte Carlo moments on a scalar linear SDE") {
  const MonteCarlo mc = scalar_sde_monte_carlo(2000);
  CHECK(std::abs(mc.mean - mc.exact_mean) <= 4.0 * mc.standard_error);
  CHECK(std::abs(mc.variance - mc.exact_variance) <= 0.2 * mc.exact_variance);
}
