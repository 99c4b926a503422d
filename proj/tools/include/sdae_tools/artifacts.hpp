#pragma once

#include "sdae/nmpc.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace sdae::tools {

/// Header of the closed-loop trajectory CSV.
const std::vector<std::string>& trajectory_columns();

std::string trajectory_csv(const nmpc::ClosedLoopLog& log);

struct SegmentMetrics {
  double start_s = 0.0;
  double end_s = 0.0;
  double setpoint = 0.0;
  int samples = 0;
  double rmse = 0.0;           ///< over the whole segment
  int settled_samples = 0;
  double settled_rmse = 0.0;   ///< after the transient window
  double settled_max_error = 0.0;
};

/// Segments are delimited by the setpoint breakpoints; the first
/// `transient_s` seconds after each change are excluded from the settled
/// statistics. Tracking error is T_true - setpoint at the sampling instants.
std::vector<SegmentMetrics> segment_metrics(const nmpc::ClosedLoopLog& log, const nmpc::Schedule& setpoint,
                                            double transient_s);

int bound_violations(const nmpc::ClosedLoopLog& log, const Vector& u_min, const Vector& u_max);

nlohmann::json summary_json(const nmpc::ClosedLoopLog& log, const nmpc::Scenario& scenario,
                            double transient_s);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sdae::tools
