#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <string>
#include <vector>

using sdae::testing::Outcome;

int main(int argc, char** argv) {
  bool report = false;
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--report") == 0) {
      report = true;
    } else {
      only.emplace_back(argv[i]);
    }
  }

  const struct {
    const char* id;
    const char* title;
    double seconds;
    std::function<Outcome()> check;
  } criteria[] = {
      {"1", "integrator orders 1, 2, 3", 10.0, sdae::testing::check_orders},
      {"2", "IND sensitivities match finite differences", 30.0, sdae::testing::check_ind},
      {"3", "tableau order conditions and stiff accuracy", 1.0, sdae::testing::check_tableaus},
      {"4", "CD-EKF equals the discrete Kalman filter on a linear model", 5.0, sdae::testing::check_filter_oracle},
      {"5", "covariance propagation", 10.0, sdae::testing::check_covariance_quadrature},
      {"6", "OCP derivatives and LQ convergence", 10.0, sdae::testing::check_ocp},
      {"7", "relaxation vanishes at the interval start", 1.0, sdae::testing::check_relaxation},
      {"8", "closed-loop electrolyzer temperature control", 120.0, sdae::testing::check_closed_loop},
      {"9", "plant simulator moments on a scalar SDE", 20.0, sdae::testing::check_monte_carlo},
  };

  int failures = 0, evaluated = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++evaluated;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.pass = o.pass && secs < c.seconds;
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s (%s; %.2f s of %.0f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs, c.seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", evaluated - failures, evaluated);
  return report || failures == 0 ? 0 : 1;
}
