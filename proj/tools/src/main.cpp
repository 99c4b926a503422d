#include "sdae/electrolyzer.hpp"
#include "sdae/errors.hpp"
#include "sdae/esdirk.hpp"
#include "sdae/nmpc.hpp"
#include "sdae/ocp.hpp"
#include "sdae_tools/artifacts.hpp"
#include "sdae_tools/scenario_file.hpp"

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace sdae;

namespace {

constexpr double kTransientSeconds = 20.0 * 60.0;

struct CommonOptions {
  std::string scenario;
  std::string out = "out";
  tools::Overrides overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--method", o.overrides.method, "esdirk12|esdirk23|esdirk34 (filter and controller)");
  cmd->add_option("--steps-per-interval", o.overrides.steps_per_interval,
                  "Integration steps per sampling interval (filter and controller)");
  cmd->add_option("--steps", o.overrides.steps, "Number of sampling intervals");
  cmd->add_option("--sigma", o.overrides.sigma, "Plant diffusion coefficient");
  cmd->add_option("--measurement-noise", o.overrides.measurement_noise, "Plant measurement noise variance");
}

tools::ScenarioFile prepare(const CommonOptions& o) {
  tools::ScenarioFile f = tools::load_scenario(o.scenario);
  tools::apply_overrides(f, o.overrides);
  fs::create_directories(o.out);
  return f;
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int cmd_simulate(const CommonOptions& o, const std::vector<std::uint64_t>& seeds_cli) {
  const tools::ScenarioFile f = prepare(o);
  const std::vector<std::uint64_t> seeds = seeds_cli.empty() ? f.seeds : seeds_cli;
  nlohmann::json runs = nlohmann::json::array();
  bool failed = false;
  for (std::uint64_t seed : seeds) {
    const nmpc::Scenario sc = tools::to_scenario(f, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const nmpc::ClosedLoopLog log = nmpc::run_closed_loop(sc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("seed {}: {} steps in {:.2f} s", seed, log.steps.size(), secs);
    tools::write_text(fs::path(o.out) / ("trajectory_seed" + std::to_string(seed) + ".csv"),
                      tools::trajectory_csv(log));
    runs.push_back(tools::summary_json(log, sc, kTransientSeconds));
    if (log.failed) {
      spdlog::error("seed {}: {}", seed, log.error);
      failed = true;
    }
  }
  nlohmann::json summary;
  summary["scenario"] = fs::path(o.scenario).filename().string();
  summary["runs"] = runs;
  tools::write_text(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
  if (failed) {
    std::cerr << "RunError: closed-loop run failed, see summary.json\n";
    return 3;
  }
  return 0;
}

int cmd_integrate(const CommonOptions& o) {
  const tools::ScenarioFile f = prepare(o);
  const nmpc::Scenario sc = tools::to_scenario(f, f.seeds.front());
  const Model& model = *sc.model;
  const Dimensions& n = model.dims();
  const Vector d = sc.disturbance.at(0.0);
  const Vector y0 = solve_consistent_algebraic(model, 0.0, sc.x0, sc.u_init, d, sc.y_guess);
  Vector s = esdirk::combine(sc.x0, y0);

  esdirk::Integrator integrator(sc.ocp.method, sc.ocp.newton);
  esdirk::SensitivityPair sens = esdirk::SensitivityPair::identity(n.ns(), n.nu);
  const int steps = sc.steps * sc.ocp.steps_per_interval;
  const double h = sc.Ts / sc.ocp.steps_per_interval;

  std::string csv = "t_min,T,T_in,U_cell,I,error_estimate_T,newton_corrections\n";
  csv += "0," + num(s[0]) + "," + num(s[1]) + "," + num(s[2]) + "," + num(s[3]) + ",0,0\n";
  esdirk::StepRecord prev;
  for (int k = 0; k < steps; ++k) {
    const long before = integrator.stats().newton_corrections;
    esdirk::StepResult r = integrator.step_with_sensitivities(model, k * h, s, sc.u_init, d, h,
                                                              k == 0 ? nullptr : &prev, sens);
    s = r.s;
    prev = std::move(r.record);
    csv += num((k + 1) * h / 60.0) + "," + num(s[0]) + "," + num(s[1]) + "," + num(s[2]) + "," +
           num(s[3]) + "," + num(prev.error_estimate[0]) + "," +
           std::to_string(integrator.stats().newton_corrections - before) + "\n";
  }
  tools::write_text(fs::path(o.out) / "integrate.csv", csv);

  std::string sens_csv = "row,dT0,dT_in0,dU_cell0,dI0,df_in\n";
  const char* rows[] = {"T", "T_in", "U_cell", "I"};
  for (Index i = 0; i < n.ns(); ++i) {
    sens_csv += rows[i];
    for (Index j = 0; j < n.ns(); ++j) sens_csv += "," + num(sens.ds_ds0(i, j));
    sens_csv += "," + num(sens.ds_du(i, 0)) + "\n";
  }
  tools::write_text(fs::path(o.out) / "sensitivities.csv", sens_csv);

  nlohmann::json j;
  j["method"] = std::string(esdirk::to_string(sc.ocp.method));
  j["steps"] = steps;
  j["step_size_s"] = h;
  j["factorizations"] = integrator.stats().factorizations;
  j["newton_corrections"] = integrator.stats().newton_corrections;
  j["final_state"] = {s[0], s[1], s[2], s[3]};
  tools::write_text(fs::path(o.out) / "integrate_summary.json", j.dump(2) + "\n");
  return 0;
}

int cmd_solve_ocp(const CommonOptions& o) {
  const tools::ScenarioFile f = prepare(o);
  const nmpc::Scenario sc = tools::to_scenario(f, f.seeds.front());
  const Model& model = *sc.model;
  const Dimensions& n = model.dims();
  const ocp::Layout layout(n, sc.ocp.N);
  const Vector d0 = sc.disturbance.at(0.0);
  const Vector y_hat = solve_consistent_algebraic(model, 0.0, sc.x_hat0, sc.u_init, d0, sc.y_guess);

  ocp::OcpData data;
  data.x_init = sc.x_hat0;
  data.u_prev = sc.u_init;
  for (int j = 0; j < sc.ocp.N; ++j) data.d.push_back(sc.disturbance.at(j * sc.Ts));
  for (int j = 0; j <= sc.ocp.N; ++j) data.zbar.push_back(sc.setpoint.at(j * sc.Ts));

  const Vector w0 = ocp::replicate_initial(layout, sc.x_hat0, y_hat, sc.u_init);
  const ocp::SqpResult res = ocp::sqp_solve(model, w0, data, sc.ocp, sc.sqp);

  std::string csv = "t_min,T,T_in,U_cell,I,f_in,T_setpoint\n";
  for (int j = 0; j <= sc.ocp.N; ++j) {
    const int ju = std::min(j, sc.ocp.N - 1);
    const Vector x = res.w.segment(layout.x(j), n.nx);
    const Vector y = res.w.segment(layout.y(ju), n.ny);
    csv += num(j * sc.Ts / 60.0) + "," + num(x[0]) + "," + num(x[1]) + "," + num(y[0]) + "," +
           num(y[1]) + "," + num(res.w[layout.u(ju)]) + "," + num(data.zbar[j][0]) + "\n";
  }
  tools::write_text(fs::path(o.out) / "ocp.csv", csv);

  nlohmann::json j;
  j["status"] = res.status == ocp::SqpStatus::Converged ? "converged" : "max_iterations";
  j["iterations"] = res.iterations;
  j["objective"] = res.objective;
  j["stationarity"] = res.kkt;
  j["infeasibility"] = res.infeasibility;
  j["evaluations"] = res.evaluations;
  j["first_input"] = res.w[layout.u(0)];
  tools::write_text(fs::path(o.out) / "ocp_summary.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::cfg::load_env_levels();
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"NMPC for stochastic DAE systems"};
  app.require_subcommand(1);

  CommonOptions sim_opts, int_opts, ocp_opts;
  std::vector<std::uint64_t> seeds;
  CLI::App* sim = app.add_subcommand("simulate", "Closed-loop NMPC simulation");
  add_common(sim, sim_opts);
  sim->add_option("--seed", seeds, "Seed or comma-separated seeds")->delimiter(',');
  CLI::App* integ = app.add_subcommand("integrate", "Open-loop integration with sensitivities");
  add_common(integ, int_opts);
  CLI::App* solve = app.add_subcommand("solve-ocp", "Single OCP solve from the filter's initial state");
  add_common(solve, ocp_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_opts, seeds);
    if (integ->parsed()) return cmd_integrate(int_opts);
    if (solve->parsed()) return cmd_solve_ocp(ocp_opts);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::ParseError || e.code() == ErrorCode::InvalidArgument ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "RunError: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
