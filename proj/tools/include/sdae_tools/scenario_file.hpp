#pragma once

#include "sdae/nmpc.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sdae::tools {

/// A breakpoint of a piecewise-constant schedule, time in minutes.
struct Breakpoint {
  double time_min = 0.0;
  std::vector<double> value;

  bool operator==(const Breakpoint&) const = default;
};

/// The scenario file in its own units (minutes, degC, kg/s, W). Converted to
/// seconds only by to_scenario().
struct ScenarioFile {
  std::string model = "electrolyzer";
  std::string parameters;  ///< parameter file, relative to the scenario file

  double sampling_time_min = 4.0;
  int steps = 60;
  int plant_steps = 20;
  std::vector<std::uint64_t> seeds{42};
  double plant_sigma = 0.03;
  double measurement_noise = 1.0;  ///< variance of the drawn measurement noise

  std::vector<double> x0{70.0, 40.0};
  std::vector<double> y_guess{1.8, 4800.0};
  std::vector<double> u_prev{3.1};
  std::vector<double> x_hat0{70.0, 45.0};
  std::vector<double> P0_diag{1.0, 25.0};

  double R = 1.0;
  std::string filter_method = "esdirk34";
  int filter_steps = 5;

  double horizon_min = 100.0;
  int intervals = 25;
  double Qz = 10.0;
  double Qdu = 0.1;
  double u_min = 2.0;
  double u_max = 10.0;
  double eta = 1.0;
  std::string ocp_method = "esdirk34";
  int ocp_steps = 5;
  double newton_abs = 1e-10;
  double newton_rel = 1e-10;
  double kkt_tolerance = 1e-6;
  int max_sqp_iterations = 100;
  bool reuse_hessian = true;

  std::vector<Breakpoint> disturbance{{0.0, {25.0, 2.0e6}}};
  std::vector<Breakpoint> setpoint{{0.0, {75.0}}, {60.0, {60.0}}, {120.0, {75.0}}, {180.0, {60.0}}};

  std::filesystem::path base_dir;  ///< directory the file was read from

  bool operator==(const ScenarioFile& other) const;
};

/// Throws ParseError on syntax errors, unknown keys and invalid values.
ScenarioFile parse_scenario(const std::string& text, const std::string& source = "<string>");
ScenarioFile load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const ScenarioFile& file);

/// Per-run overrides from the command line.
struct Overrides {
  std::optional<double> sigma;
  std::optional<double> measurement_noise;
  std::optional<std::string> method;
  std::optional<int> steps_per_interval;
  std::optional<int> steps;
};
void apply_overrides(ScenarioFile& file, const Overrides& o);

/// Loads the model parameters and builds the run description for one seed.
nmpc::Scenario to_scenario(const ScenarioFile& file, std::uint64_t seed);

}  // namespace sdae::tools
