#include "sdae_tools/artifacts.hpp"

#include "sdae/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace sdae::tools {

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols{
      "t_min", "T_true", "T_in_true", "U_cell", "I", "T_measured", "T_hat", "T_in_hat",
      "P_T", "P_T_in", "f_in", "T_setpoint", "sqp_iterations"};
  return cols;
}

std::string trajectory_csv(const nmpc::ClosedLoopLog& log) {
  std::string out;
  const auto& cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const nmpc::StepLog& r : log.steps) {
    const double fields[] = {r.t / 60.0,      r.x_true[0],  r.x_true[1],   r.y_true[0],
                             r.y_true[1],     r.measurement[0], r.x_filt[0], r.x_filt[1],
                             r.P_filt(0, 0),  r.P_filt(1, 1), r.u[0],      r.zbar[0]};
    for (double f : fields) out += num(f) + ",";
    out += std::to_string(r.sqp_iterations) + "\n";
  }
  return out;
}

std::vector<SegmentMetrics> segment_metrics(const nmpc::ClosedLoopLog& log, const nmpc::Schedule& setpoint,
                                            double transient_s) {
  std::vector<SegmentMetrics> out;
  if (log.steps.empty()) return out;
  const double t_end = log.steps.back().t;
  const auto& times = setpoint.times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double start = i == 0 ? 0.0 : times[i];
    const double end = i + 1 < times.size() ? times[i + 1] : std::numeric_limits<double>::infinity();
    if (start > t_end) break;
    SegmentMetrics m;
    m.start_s = start;
    m.end_s = std::min(end, t_end + 1e-9);
    m.setpoint = setpoint.values()[i][0];
    double sum = 0.0, settled = 0.0;
    for (const nmpc::StepLog& r : log.steps) {
      if (r.t < start - 1e-9 || r.t >= end - 1e-9) continue;
      const double e = r.x_true[0] - m.setpoint;
      sum += e * e;
      ++m.samples;
      if (r.t >= start + transient_s - 1e-9) {
        settled += e * e;
        ++m.settled_samples;
        m.settled_max_error = std::max(m.settled_max_error, std::abs(e));
      }
    }
    if (m.samples == 0) continue;
    m.rmse = std::sqrt(sum / m.samples);
    m.settled_rmse = m.settled_samples > 0 ? std::sqrt(settled / m.settled_samples) : 0.0;
    out.push_back(m);
  }
  return out;
}

int bound_violations(const nmpc::ClosedLoopLog& log, const Vector& u_min, const Vector& u_max) {
  int count = 0;
  for (const nmpc::StepLog& r : log.steps) {
    for (Index i = 0; i < r.u.size(); ++i) {
      if (r.u[i] < u_min[i] || r.u[i] > u_max[i]) ++count;
    }
  }
  return count;
}

nlohmann::json summary_json(const nmpc::ClosedLoopLog& log, const nmpc::Scenario& sc, double transient_s) {
  nlohmann::json j;
  j["seed"] = sc.seed;
  j["steps_requested"] = sc.steps;
  j["steps_completed"] = log.steps.size();
  j["failed"] = log.failed;
  if (log.failed) {
    j["failed_step"] = log.failed_step;
    j["error"] = log.error;
  }
  nlohmann::json segs = nlohmann::json::array();
  for (const SegmentMetrics& m : segment_metrics(log, sc.setpoint, transient_s)) {
    segs.push_back({{"start_min", m.start_s / 60.0},
                    {"end_min", m.end_s / 60.0},
                    {"setpoint", m.setpoint},
                    {"samples", m.samples},
                    {"rmse", m.rmse},
                    {"settled_samples", m.settled_samples},
                    {"settled_rmse", m.settled_rmse},
                    {"settled_max_abs_error", m.settled_max_error}});
  }
  j["segments"] = segs;
  j["transient_min"] = transient_s / 60.0;
  j["bound_violations"] = bound_violations(log, sc.ocp.u_min, sc.ocp.u_max);
  long newton = 0, sqp = 0;
  int unconverged = 0;
  for (const nmpc::StepLog& r : log.steps) {
    newton += r.newton_corrections;
    sqp += r.sqp_iterations;
    if (!r.sqp_converged) ++unconverged;
  }
  j["newton_iterations"] = newton;
  j["sqp_iterations"] = sqp;
  j["sqp_unconverged"] = unconverged;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::RunError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::RunError, "write to '" + path.string() + "' failed");
}

}  // namespace sdae::tools
