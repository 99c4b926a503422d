#include "sdae/cdekf.hpp"
#include "sdae/esdirk.hpp"
#include "sdae/ocp.hpp"
#include "sdae_tools/scenario_file.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

using namespace sdae;

namespace {

const nmpc::Scenario& scenario() {
  static const nmpc::Scenario sc = tools::to_scenario(
      tools::load_scenario(std::filesystem::path(SDAE_SOURCE_DIR) / "scenarios" / "electrolyzer_default.scn"), 1);
  return sc;
}

Vector initial_state() {
  const nmpc::Scenario& sc = scenario();
  const Vector y = solve_consistent_algebraic(*sc.model, 0.0, sc.x0, sc.u_init, sc.disturbance.at(0.0), sc.y_guess);
  return esdirk::combine(sc.x0, y);
}

void BM_EsdirkStep(benchmark::State& state) {
  const auto method = static_cast<esdirk::Method>(state.range(0));
  const bool with_sens = state.range(1) != 0;
  const nmpc::Scenario& sc = scenario();
  const Vector s0 = initial_state();
  const Vector d = sc.disturbance.at(0.0);
  esdirk::Integrator integ(method, sc.ocp.newton);
  for (auto _ : state) {
    esdirk::SensitivityPair sens = esdirk::SensitivityPair::identity(4, 1);
    esdirk::StepResult r = with_sens ? integ.step_with_sensitivities(*sc.model, 0.0, s0, sc.u_init, d, 48.0, nullptr, sens)
                                     : integ.step(*sc.model, 0.0, s0, sc.u_init, d, 48.0, nullptr);
    benchmark::DoNotOptimize(r.s);
  }
  state.SetLabel(std::string(esdirk::to_string(method)) + (with_sens ? " +sens" : ""));
}
BENCHMARK(BM_EsdirkStep)->ArgsProduct({{0, 1, 2}, {0, 1}});

void BM_FilterPredict(benchmark::State& state) {
  const nmpc::Scenario& sc = scenario();
  const Vector s0 = initial_state();
  const ekf::FilterState f{s0.head(2), s0.tail(2), sc.P0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(ekf::predict(*sc.model, f, 0.0, sc.u_init, sc.disturbance.at(0.0), sc.Ts, sc.predict));
  }
}
BENCHMARK(BM_FilterPredict);

void BM_EvalNlp(benchmark::State& state) {
  const nmpc::Scenario& sc = scenario();
  const Vector s0 = initial_state();
  const ocp::Layout L(sc.model->dims(), sc.ocp.N);
  ocp::OcpData data;
  data.x_init = sc.x0;
  data.u_prev = sc.u_init;
  for (int j = 0; j < sc.ocp.N; ++j) data.d.push_back(sc.disturbance.at(j * sc.Ts));
  for (int j = 0; j <= sc.ocp.N; ++j) data.zbar.push_back(sc.setpoint.at(j * sc.Ts));
  const Vector w = ocp::replicate_initial(L, s0.head(2), s0.tail(2), sc.u_init);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ocp::eval_nlp(*sc.model, w, data, sc.ocp));
  }
}
BENCHMARK(BM_EvalNlp)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
