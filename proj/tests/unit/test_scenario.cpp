#include "criteria.hpp"

#include "sdae/errors.hpp"
#include "sdae/key_value.hpp"
#include "sdae_tools/scenario_file.hpp"

#include <doctest.h>

using namespace sdae;
using namespace sdae::testing;

TEST_CASE("key-value documents") {
  const kv::Document d = kv::Document::parse("top = 1\n[a]\nx = 2.5  # comment\nlist = 1, 2,3\nname = abc\n");
  CHECK(d.integer("top") == 1);
  CHECK(d.number("a.x") == 2.5);
  CHECK(d.numbers("a.list") == std::vector<double>{1, 2, 3});
  CHECK(d.text("a.name") == "abc");
  CHECK(d.number("a.missing", 7.0) == 7.0);
  CHECK_NOTHROW(d.check_all_used());
}

TEST_CASE("unused keys and bad numbers are errors") {
  const kv::Document d = kv::Document::parse("[a]\nx = 1\ny = 2\n");
  d.number("a.x");
  CHECK_THROWS_AS(d.check_all_used(), Error);
  CHECK_THROWS_AS(kv::Document::parse("[a]\nx = 1e\n").number("a.x"), Error);
  CHECK_THROWS_AS(kv::Document::parse("[a\nx = 1\n"), Error);
  CHECK_THROWS_AS(kv::Document::parse("[a]\nx = 1\nx = 2\n"), Error);
}

TEST_CASE("scenario round trip") {
  const tools::ScenarioFile f = tools::load_scenario(source_dir() / "scenarios" / "electrolyzer_default.scn");
  const tools::ScenarioFile g = tools::parse_scenario(tools::serialize_scenario(f));
  CHECK(g.setpoint == f.setpoint);
  CHECK(g.disturbance == f.disturbance);
  CHECK(g.x_hat0 == f.x_hat0);
  CHECK(g.Qz == f.Qz);
  CHECK(g.horizon_min == f.horizon_min);
}

TEST_CASE("default scenario constants") {
  const tools::ScenarioFile f = tools::load_scenario(source_dir() / "scenarios" / "electrolyzer_default.scn");
  CHECK(f.sampling_time_min == 4.0);
  CHECK(f.horizon_min == 100.0);
  CHECK(f.intervals == 25);
  CHECK(f.Qz == 10.0);
  CHECK(f.Qdu == 0.1);
  CHECK(f.plant_sigma == 0.03);
  CHECK(f.R == 1.0);
  CHECK(f.u_min == 2.0);
  CHECK(f.u_max == 10.0);
  const nmpc::Scenario sc = tools::to_scenario(f, 42);
  CHECK(sc.Ts == 240.0);
  CHECK(sc.ocp.Ts == 240.0);
  CHECK(sc.ocp.N == 25);
  CHECK(sc.setpoint.at(60.0 * 60.0)[0] == 60.0);
  CHECK(sc.x_hat0[1] - sc.x0[1] == 5.0);
}

TEST_CASE("overrides") {
  tools::ScenarioFile f = tools::load_scenario(source_dir() / "scenarios" / "electrolyzer_default.scn");
  tools::Overrides o;
  o.sigma = 0.0;
  o.measurement_noise = 0.0;
  o.method = "esdirk23";
  o.steps_per_interval = 8;
  tools::apply_overrides(f, o);
  const nmpc::Scenario sc = tools::to_scenario(f, 1);
  CHECK(sc.plant_sigma.norm() == 0.0);
  CHECK(sc.plant_R.norm() == 0.0);
  CHECK(sc.ocp.method == esdirk::Method::ESDIRK23);
  CHECK(sc.predict.method == esdirk::Method::ESDIRK23);
  CHECK(sc.ocp.steps_per_interval == 8);
  CHECK(sc.predict.steps == 8);
}

TEST_CASE("invalid scenarios are rejected") {
  CHECK_THROWS_AS(tools::parse_scenario("[ocp]\nintervals = 0\n"), Error);
  CHECK_THROWS_AS(tools::parse_scenario("[ocp]\nunknown = 1\n"), Error);
  CHECK_THROWS_AS(tools::parse_scenario("[ocp]\nu_min = 5\nu_max = 4\n"), Error);
}
