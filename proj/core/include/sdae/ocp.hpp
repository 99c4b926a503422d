#pragma once

#include "sdae/esdirk.hpp"
#include "sdae/model.hpp"
#include "sdae/qp.hpp"

#include <vector>

namespace sdae::ocp {

struct OcpConfig {
  int N = 25;                ///< shooting intervals
  double Ts = 240.0;         ///< interval length (s)
  Vector u_min, u_max;
  Matrix Qz;                 ///< tracking weight inside the running cost
  Matrix Qdu;                ///< move weight before scaling by 1/Ts
  double eta = 1.0;          ///< decay of the relaxation function
  int steps_per_interval = 5;
  esdirk::Method method = esdirk::Method::ESDIRK34;
  NewtonSettings newton{0.1, 1e-10, 1e-10, 20};

  Matrix Qz_bar() const { return Qz / Ts; }
  Matrix Qdu_bar() const { return Qdu / Ts; }
  void validate(const Dimensions& dims) const;
};

/// Index bookkeeping for w = (wx_0, wy_0, u_0, ..., wx_{N-1}, wy_{N-1}, u_{N-1}, wx_N).
class Layout {
 public:
  Layout(const Dimensions& dims, int N);

  int N() const { return N_; }
  Index size() const { return N_ * stride_ + nx_; }
  Index constraints() const { return nx_ + N_ * (nx_ + ny_); }
  Index x(int j) const { return j * stride_; }
  Index y(int j) const { return j * stride_ + nx_; }
  Index u(int j) const { return j * stride_ + nx_ + ny_; }
  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index nu() const { return nu_; }

  /// Row of the matching block of interval j; g rows follow at +nx.
  Index match_row(int j) const { return nx_ + j * (nx_ + ny_); }

  /// Input components (kept by condensing) and state components (eliminated).
  qp::Partition partition() const;

  Vector pack(const std::vector<Vector>& x, const std::vector<Vector>& y,
              const std::vector<Vector>& u) const;
  void unpack(const Vector& w, std::vector<Vector>& x, std::vector<Vector>& y,
              std::vector<Vector>& u) const;

 private:
  int N_;
  Index nx_, ny_, nu_, stride_;
};

/// Problem data that changes from one sampling instant to the next.
struct OcpData {
  double t0 = 0.0;
  Vector x_init;               ///< filtered differential state
  Vector u_prev;               ///< previously applied input
  std::vector<Vector> d;       ///< d_0 .. d_{N-1}
  std::vector<Vector> zbar;    ///< setpoints z_0 .. z_N (last one for the terminal term)
};

/// exp(-eta (t - tj) / (tj1 - tj)).
double relaxation(double t, double tj, double tj1, double eta);

/// The DAE with g replaced by g - p(t) rho, where rho is an extra input block
/// appended to u. With rho = 0 it evaluates exactly like the original model.
Model relaxed_model(const Model& model, double tj, double tj1, double eta);

struct ShootResult {
  Vector endpoint;   ///< s(t_{j+1}), combined
  double cost = 0.0; ///< integral of 1/2 |z - zbar|^2_Qz
  Matrix ds_dp;      ///< d endpoint / d(wx_j, wy_j, u_j)
  Matrix dcost_dp;   ///< 1 x (nx + ny + nu)
  long newton_corrections = 0;
};

ShootResult shoot_interval(const Model& model, const Vector& wx, const Vector& wy,
                           const Vector& u, const Vector& d, double tj, double tj1,
                           const Vector& zbar, const OcpConfig& config, bool relax = true);

struct NlpEvaluation {
  double phi = 0.0;
  Vector grad;   ///< d phi / dw
  Vector b;      ///< constraint residuals
  Matrix B;      ///< db/dw (dense)
  long newton_corrections = 0;
};

NlpEvaluation eval_nlp(const Model& model, const Vector& w, const OcpData& data,
                       const OcpConfig& config);

/// Objective and constraints only (no sensitivities).
NlpEvaluation eval_nlp_values(const Model& model, const Vector& w, const OcpData& data,
                              const OcpConfig& config);

struct SqpSettings {
  double tolerance = 1e-6;
  int max_iterations = 100;
  double damping = 0.2;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double penalty_factor = 1.1;
  double min_step = 1e-10;
  /// Constraint rows whose Jacobian entries exceed this are scaled down to it
  /// for the merit function and the feasibility test.
  double row_scale_threshold = 100.0;
  /// Retry a rejected full step once with a correction of the state and
  /// algebraic components before backtracking.
  bool second_order_correction = true;
};

enum class SqpStatus { Converged, MaxIterations };

struct SqpResult {
  Vector w;
  Vector multipliers;
  SqpStatus status = SqpStatus::MaxIterations;
  int iterations = 0;
  double objective = 0.0;
  double kkt = 0.0;              ///< projected stationarity at exit
  double infeasibility = 0.0;    ///< unscaled ||b||_inf at exit
  long evaluations = 0;
  long newton_corrections = 0;
  Matrix hessian;                ///< final reduced BFGS matrix in the inputs
  std::vector<double> merit;     ///< merit value of every accepted iterate
  std::vector<qp::Bound> active;

  Vector first_input(const Layout& layout) const { return w.segment(layout.u(0), layout.nu()); }
};

/// Full-space QP Hessian: the exact move-penalty Hessian plus a reduced
/// quasi-Newton matrix, both placed on the input components (N nu square).
/// The state and algebraic blocks are zero; condensing only needs the
/// Hessian on the null space of the matching and algebraic constraints.
Matrix full_space_hessian(const Layout& layout, const OcpConfig& config, const Matrix& reduced);

/// SQP with damped BFGS and an l1-merit backtracking line search. Returns the
/// last accepted iterate with status MaxIterations when the limit is hit.
/// Throws LineSearchFailure when no acceptable step can be found.
SqpResult sqp_solve(const Model& model, const Vector& w0, const OcpData& data,
                    const OcpConfig& config, const SqpSettings& settings = {},
                    const Matrix* initial_hessian = nullptr);

/// Shift by one interval, duplicating the last input and algebraic node.
Vector warm_start_shift(const Vector& w, const Layout& layout);

/// Reduced Hessian shifted like the inputs in warm_start_shift.
Matrix shift_hessian(const Matrix& H, const Layout& layout);

/// w = (x0, y0, u0, ..., x0) for the first solve.
Vector replicate_initial(const Layout& layout, const Vector& x0, const Vector& y0, const Vector& u0);

/// Terminal output z(t_N) and its partials with respect to wx_N and u_{N-1}.
struct TerminalOutput {
  Vector z;
  Vector y;
  Matrix dz_dx;
  Matrix dz_du;
};

TerminalOutput terminal_output(const Model& model, double tN, const Vector& xN, const Vector& y_guess,
                               const Vector& u, const Vector& d);

}  // namespace sdae::ocp
