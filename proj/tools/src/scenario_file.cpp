#include "sdae_tools/scenario_file.hpp"

#include "sdae/electrolyzer.hpp"
#include "sdae/errors.hpp"
#include "sdae/key_value.hpp"
#include "sdae/tableau.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sdae::tools {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

double to_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorCode::ParseError, what + ": '" + t + "' is not a number");
  }
  return v;
}

// "t0: a, b; t1: c, d"
std::vector<Breakpoint> parse_schedule(const std::string& text, const std::string& what) {
  std::vector<Breakpoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (trim(item).empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) fail(ErrorCode::ParseError, what + ": expected 'time: value, ...'");
    Breakpoint bp;
    bp.time_min = to_double(item.substr(0, colon), what);
    std::stringstream vs(item.substr(colon + 1));
    std::string v;
    while (std::getline(vs, v, ',')) bp.value.push_back(to_double(v, what));
    if (bp.value.empty()) fail(ErrorCode::ParseError, what + ": breakpoint without values");
    out.push_back(std::move(bp));
  }
  if (out.empty()) fail(ErrorCode::ParseError, what + ": empty schedule");
  return out;
}

std::string format_schedule(const std::vector<Breakpoint>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += (i ? "; " : "") + fmt(s[i].time_min) + ": " + join(s[i].value);
  }
  return out;
}

int positive_int(const kv::Document& doc, const std::string& key, int fallback) {
  const long v = doc.integer(key, fallback);
  if (v < 1 || v > 1000000) fail(ErrorCode::ParseError, key + " must be a positive integer");
  return static_cast<int>(v);
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

nmpc::Schedule to_schedule(const std::vector<Breakpoint>& bps) {
  std::vector<double> times;
  std::vector<Vector> values;
  for (const Breakpoint& bp : bps) {
    times.push_back(60.0 * bp.time_min);
    values.push_back(to_vector(bp.value));
  }
  return nmpc::Schedule(std::move(times), std::move(values));
}

}  // namespace

bool ScenarioFile::operator==(const ScenarioFile& o) const {
  return model == o.model && parameters == o.parameters && sampling_time_min == o.sampling_time_min &&
         steps == o.steps && plant_steps == o.plant_steps && seeds == o.seeds &&
         plant_sigma == o.plant_sigma && measurement_noise == o.measurement_noise && x0 == o.x0 &&
         y_guess == o.y_guess && u_prev == o.u_prev && x_hat0 == o.x_hat0 && P0_diag == o.P0_diag &&
         R == o.R && filter_method == o.filter_method && filter_steps == o.filter_steps &&
         horizon_min == o.horizon_min && intervals == o.intervals && Qz == o.Qz && Qdu == o.Qdu &&
         u_min == o.u_min && u_max == o.u_max && eta == o.eta && ocp_method == o.ocp_method &&
         ocp_steps == o.ocp_steps && newton_abs == o.newton_abs && newton_rel == o.newton_rel &&
         kkt_tolerance == o.kkt_tolerance && max_sqp_iterations == o.max_sqp_iterations &&
         reuse_hessian == o.reuse_hessian && disturbance == o.disturbance && setpoint == o.setpoint;
}

ScenarioFile parse_scenario(const std::string& text, const std::string& source) {
  const kv::Document doc = kv::Document::parse(text, source);
  ScenarioFile f;
  f.model = doc.text("model.name", f.model);
  f.parameters = doc.text("model.parameters");

  f.sampling_time_min = doc.number("simulation.sampling_time", f.sampling_time_min);
  f.steps = positive_int(doc, "simulation.steps", f.steps);
  f.plant_steps = positive_int(doc, "simulation.plant_steps", f.plant_steps);
  if (doc.has("simulation.seeds")) {
    f.seeds.clear();
    for (double s : doc.numbers("simulation.seeds")) {
      if (s < 0 || s != std::floor(s)) fail(ErrorCode::ParseError, "seeds must be non-negative integers");
      f.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  f.plant_sigma = doc.number("simulation.sigma", f.plant_sigma);
  f.measurement_noise = doc.number("simulation.measurement_noise", f.measurement_noise);

  if (doc.has("initial.x0")) f.x0 = doc.numbers("initial.x0");
  if (doc.has("initial.y_guess")) f.y_guess = doc.numbers("initial.y_guess");
  if (doc.has("initial.u_prev")) f.u_prev = doc.numbers("initial.u_prev");
  if (doc.has("initial.x_hat0")) f.x_hat0 = doc.numbers("initial.x_hat0");
  if (doc.has("initial.P0_diag")) f.P0_diag = doc.numbers("initial.P0_diag");

  f.R = doc.number("filter.R", f.R);
  f.filter_method = doc.text("filter.method", f.filter_method);
  f.filter_steps = positive_int(doc, "filter.steps_per_interval", f.filter_steps);

  f.horizon_min = doc.number("ocp.horizon", f.horizon_min);
  f.intervals = positive_int(doc, "ocp.intervals", f.intervals);
  f.Qz = doc.number("ocp.Qz", f.Qz);
  f.Qdu = doc.number("ocp.Qdu", f.Qdu);
  f.u_min = doc.number("ocp.u_min", f.u_min);
  f.u_max = doc.number("ocp.u_max", f.u_max);
  f.eta = doc.number("ocp.eta", f.eta);
  f.ocp_method = doc.text("ocp.method", f.ocp_method);
  f.ocp_steps = positive_int(doc, "ocp.steps_per_interval", f.ocp_steps);
  f.newton_abs = doc.number("ocp.newton_abs", f.newton_abs);
  f.newton_rel = doc.number("ocp.newton_rel", f.newton_rel);
  f.kkt_tolerance = doc.number("ocp.kkt_tolerance", f.kkt_tolerance);
  f.max_sqp_iterations = positive_int(doc, "ocp.max_iterations", f.max_sqp_iterations);
  f.reuse_hessian = doc.integer("ocp.reuse_hessian", f.reuse_hessian ? 1 : 0) != 0;

  if (doc.has("disturbance.points")) f.disturbance = parse_schedule(doc.text("disturbance.points"), "disturbance.points");
  if (doc.has("setpoint.points")) f.setpoint = parse_schedule(doc.text("setpoint.points"), "setpoint.points");

  doc.check_all_used();

  if (f.model != "electrolyzer") fail(ErrorCode::ParseError, "unknown model '" + f.model + "'");
  esdirk::parse_method(f.filter_method);
  esdirk::parse_method(f.ocp_method);
  if (!(f.sampling_time_min > 0.0)) fail(ErrorCode::ParseError, "sampling_time must be positive");
  const double ratio = f.horizon_min / f.sampling_time_min;
  if (std::abs(ratio - f.intervals) > 1e-9 * ratio) {
    fail(ErrorCode::ParseError, "ocp.horizon must equal ocp.intervals * simulation.sampling_time");
  }
  if (f.plant_sigma < 0.0 || f.measurement_noise < 0.0 || !(f.R > 0.0)) {
    fail(ErrorCode::ParseError, "noise levels must be non-negative and R positive");
  }
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open scenario '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ScenarioFile f = parse_scenario(buf.str(), path.string());
  f.base_dir = path.parent_path();
  return f;
}

std::string serialize_scenario(const ScenarioFile& f) {
  std::vector<double> seeds(f.seeds.begin(), f.seeds.end());
  std::ostringstream o;
  o << "# Times in minutes, temperatures in degC, flows in kg/s, power in W.\n"
    << "[model]\nname = " << f.model << "\nparameters = " << f.parameters << "\n\n"
    << "[simulation]\nsampling_time = " << fmt(f.sampling_time_min) << "\nsteps = " << f.steps
    << "\nplant_steps = " << f.plant_steps << "\nseeds = " << join(seeds)
    << "\nsigma = " << fmt(f.plant_sigma) << "\nmeasurement_noise = " << fmt(f.measurement_noise) << "\n\n"
    << "[initial]\nx0 = " << join(f.x0) << "\ny_guess = " << join(f.y_guess) << "\nu_prev = " << join(f.u_prev)
    << "\nx_hat0 = " << join(f.x_hat0) << "\nP0_diag = " << join(f.P0_diag) << "\n\n"
    << "[filter]\nR = " << fmt(f.R) << "\nmethod = " << f.filter_method
    << "\nsteps_per_interval = " << f.filter_steps << "\n\n"
    << "[ocp]\nhorizon = " << fmt(f.horizon_min) << "\nintervals = " << f.intervals << "\nQz = " << fmt(f.Qz)
    << "\nQdu = " << fmt(f.Qdu) << "\nu_min = " << fmt(f.u_min) << "\nu_max = " << fmt(f.u_max)
    << "\neta = " << fmt(f.eta) << "\nmethod = " << f.ocp_method << "\nsteps_per_interval = " << f.ocp_steps
    << "\nnewton_abs = " << fmt(f.newton_abs) << "\nnewton_rel = " << fmt(f.newton_rel)
    << "\nkkt_tolerance = " << fmt(f.kkt_tolerance) << "\nmax_iterations = " << f.max_sqp_iterations
    << "\nreuse_hessian = " << (f.reuse_hessian ? 1 : 0) << "\n\n"
    << "[disturbance]\npoints = " << format_schedule(f.disturbance) << "\n\n"
    << "[setpoint]\npoints = " << format_schedule(f.setpoint) << "\n";
  return o.str();
}

void apply_overrides(ScenarioFile& f, const Overrides& o) {
  if (o.sigma) {
    if (*o.sigma < 0.0) fail(ErrorCode::InvalidArgument, "--sigma must be non-negative");
    f.plant_sigma = *o.sigma;
  }
  if (o.measurement_noise) {
    if (*o.measurement_noise < 0.0) fail(ErrorCode::InvalidArgument, "--measurement-noise must be non-negative");
    f.measurement_noise = *o.measurement_noise;
  }
  if (o.method) {
    esdirk::parse_method(*o.method);
    f.filter_method = *o.method;
    f.ocp_method = *o.method;
  }
  if (o.steps_per_interval) {
    if (*o.steps_per_interval < 1) fail(ErrorCode::InvalidArgument, "--steps-per-interval must be >= 1");
    f.filter_steps = *o.steps_per_interval;
    f.ocp_steps = *o.steps_per_interval;
  }
  if (o.steps) {
    if (*o.steps < 1) fail(ErrorCode::InvalidArgument, "--steps must be >= 1");
    f.steps = *o.steps;
  }
}

nmpc::Scenario to_scenario(const ScenarioFile& f, std::uint64_t seed) {
  const std::filesystem::path params_path =
      std::filesystem::path(f.parameters).is_absolute() ? std::filesystem::path(f.parameters)
                                                        : f.base_dir / f.parameters;
  const electrolyzer::Params params = electrolyzer::load_params(params_path);
  auto model = std::make_shared<const Model>(electrolyzer::make_model(params));
  const Dimensions& n = model->dims();

  auto sized = [](const std::vector<double>& v, Index size, const char* what) {
    if (static_cast<Index>(v.size()) != size) {
      fail(ErrorCode::ParseError, std::string(what) + " has " + std::to_string(v.size()) +
                                      " entries, expected " + std::to_string(size));
    }
    return to_vector(v);
  };

  nmpc::Scenario sc;
  sc.model = model;
  sc.plant_sigma = Matrix::Zero(n.nx, n.nw);
  sc.plant_sigma(1, 0) = f.plant_sigma;
  sc.plant_R = Matrix::Identity(n.nm, n.nm) * f.measurement_noise;
  sc.sim.steps = f.plant_steps;
  sc.seed = seed;
  sc.x0 = sized(f.x0, n.nx, "initial.x0");
  sc.y_guess = sized(f.y_guess, n.ny, "initial.y_guess");
  sc.u_init = sized(f.u_prev, n.nu, "initial.u_prev");
  sc.x_hat0 = sized(f.x_hat0, n.nx, "initial.x_hat0");
  sc.P0 = sized(f.P0_diag, n.nx, "initial.P0_diag").asDiagonal();
  sc.R = Matrix::Identity(n.nm, n.nm) * f.R;
  sc.predict.method = esdirk::parse_method(f.filter_method);
  sc.predict.steps = f.filter_steps;

  sc.Ts = 60.0 * f.sampling_time_min;
  sc.steps = f.steps;
  sc.ocp.N = f.intervals;
  sc.ocp.Ts = sc.Ts;
  sc.ocp.u_min = Vector::Constant(n.nu, f.u_min);
  sc.ocp.u_max = Vector::Constant(n.nu, f.u_max);
  sc.ocp.Qz = Matrix::Identity(n.nz, n.nz) * f.Qz;
  sc.ocp.Qdu = Matrix::Identity(n.nu, n.nu) * f.Qdu;
  sc.ocp.eta = f.eta;
  sc.ocp.method = esdirk::parse_method(f.ocp_method);
  sc.ocp.steps_per_interval = f.ocp_steps;
  sc.ocp.newton.abs = f.newton_abs;
  sc.ocp.newton.rel = f.newton_rel;
  sc.sqp.tolerance = f.kkt_tolerance;
  sc.sqp.max_iterations = f.max_sqp_iterations;
  sc.reuse_hessian = f.reuse_hessian;
  sc.disturbance = to_schedule(f.disturbance);
  sc.setpoint = to_schedule(f.setpoint);
  sc.validate();
  return sc;
}

}  // namespace sdae::tools
