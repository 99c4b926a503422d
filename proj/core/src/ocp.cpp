#include "sdae/ocp.hpp"

#include "sdae/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdae::ocp {

void OcpConfig::validate(const Dimensions& dims) const {
  if (N < 1) fail(ErrorCode::InvalidArgument, "OCP needs N >= 1");
  if (!(Ts > 0.0)) fail(ErrorCode::InvalidArgument, "OCP needs Ts > 0");
  if (steps_per_interval < 1) fail(ErrorCode::InvalidArgument, "OCP needs at least one step per interval");
  if (u_min.size() != dims.nu || u_max.size() != dims.nu) {
    fail(ErrorCode::DimensionMismatch, "OCP input bounds must have nu entries");
  }
  for (Index i = 0; i < dims.nu; ++i) {
    if (!(u_min[i] <= u_max[i])) fail(ErrorCode::InvalidArgument, "OCP input bounds: u_min > u_max");
  }
  if (Qz.rows() != dims.nz || Qz.cols() != dims.nz) fail(ErrorCode::DimensionMismatch, "Qz must be nz x nz");
  if (Qdu.rows() != dims.nu || Qdu.cols() != dims.nu) fail(ErrorCode::DimensionMismatch, "Qdu must be nu x nu");
}

Layout::Layout(const Dimensions& dims, int N)
    : N_(N), nx_(dims.nx), ny_(dims.ny), nu_(dims.nu), stride_(dims.nx + dims.ny + dims.nu) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "layout needs N >= 1");
}

qp::Partition Layout::partition() const {
  qp::Partition p;
  for (int j = 0; j < N_; ++j) {
    for (Index i = 0; i < nx_ + ny_; ++i) p.eliminated.push_back(x(j) + i);
    for (Index i = 0; i < nu_; ++i) p.kept.push_back(u(j) + i);
  }
  for (Index i = 0; i < nx_; ++i) p.eliminated.push_back(x(N_) + i);
  return p;
}

Vector Layout::pack(const std::vector<Vector>& x, const std::vector<Vector>& y,
                    const std::vector<Vector>& u) const {
  if (static_cast<int>(x.size()) != N_ + 1 || static_cast<int>(y.size()) != N_ ||
      static_cast<int>(u.size()) != N_) {
    fail(ErrorCode::DimensionMismatch, "layout pack: expected N+1 x nodes, N y and u nodes");
  }
  Vector w(size());
  for (int j = 0; j < N_; ++j) {
    w.segment(this->x(j), nx_) = x[j];
    w.segment(this->y(j), ny_) = y[j];
    w.segment(this->u(j), nu_) = u[j];
  }
  w.segment(this->x(N_), nx_) = x[N_];
  return w;
}

void Layout::unpack(const Vector& w, std::vector<Vector>& x, std::vector<Vector>& y,
                    std::vector<Vector>& u) const {
  if (w.size() != size()) fail(ErrorCode::DimensionMismatch, "layout unpack: wrong length");
  x.assign(N_ + 1, Vector());
  y.assign(N_, Vector());
  u.assign(N_, Vector());
  for (int j = 0; j < N_; ++j) {
    x[j] = w.segment(this->x(j), nx_);
    y[j] = w.segment(this->y(j), ny_);
    u[j] = w.segment(this->u(j), nu_);
  }
  x[N_] = w.segment(this->x(N_), nx_);
}

double relaxation(double t, double tj, double tj1, double eta) {
  return std::exp(-eta * (t - tj) / (tj1 - tj));
}

Model relaxed_model(const Model& model, double tj, double tj1, double eta) {
  const ModelFunctions& base = model.functions();
  const Index nu = base.dims.nu;
  const Index ny = base.dims.ny;
  ModelFunctions fn;
  fn.name = base.name + " (relaxed)";
  fn.dims = base.dims;
  fn.dims.nu = nu + ny;
  fn.sigma = base.sigma;

  auto head = [nu](const Vector& v) { return Vector(v.head(nu)); };
  auto append_zero = [ny](const Matrix& m) {
    Matrix out = Matrix::Zero(m.rows(), m.cols() + ny);
    out.leftCols(m.cols()) = m;
    return out;
  };

  fn.f = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return base.f(t, x, y, head(u), d);
  };
  fn.g = [base, head, ny, tj, tj1, eta](double t, const Vector& x, const Vector& y,
                                            const Vector& u, const Vector& d) {
    return Vector(base.g(t, x, y, head(u), d) - relaxation(t, tj, tj1, eta) * u.tail(ny));
  };
  fn.df_dx = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return base.df_dx(t, x, y, head(u), d);
  };
  fn.df_dy = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return base.df_dy(t, x, y, head(u), d);
  };
  fn.df_du = [base, head, append_zero](double t, const Vector& x, const Vector& y, const Vector& u,
                                       const Vector& d) {
    return append_zero(base.df_du(t, x, y, head(u), d));
  };
  fn.dg_dx = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return base.dg_dx(t, x, y, head(u), d);
  };
  fn.dg_dy = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    return base.dg_dy(t, x, y, head(u), d);
  };
  fn.dg_du = [base, head, nu, ny, tj, tj1, eta](double t, const Vector& x, const Vector& y,
                                                const Vector& u, const Vector& d) {
    Matrix out(ny, nu + ny);
    out.leftCols(nu) = base.dg_du(t, x, y, head(u), d);
    out.rightCols(ny) = -relaxation(t, tj, tj1, eta) * Matrix::Identity(ny, ny);
    return out;
  };
  if (base.h) {
    fn.h = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
      return base.h(t, x, y, head(u), d);
    };
    fn.dh_dx = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
      return base.dh_dx(t, x, y, head(u), d);
    };
    fn.dh_dy = [base, head](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
      return base.dh_dy(t, x, y, head(u), d);
    };
    fn.dh_du = [base, head, append_zero](double t, const Vector& x, const Vector& y, const Vector& u,
                                         const Vector& d) {
      return append_zero(base.dh_du(t, x, y, head(u), d));
    };
  }
  return Model(std::move(fn));
}

namespace {

esdirk::Quadrature tracking_cost(const Model& model, const Vector& zbar, const Matrix& Qz) {
  const Model* mp = &model;
  esdirk::Quadrature q;
  q.size = 1;
  q.q = [mp, zbar, Qz](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    const Vector e = mp->h(t, x, y, u, d) - zbar;
    return Vector::Constant(1, 0.5 * e.dot(Qz * e));
  };
  q.dq_dx = [mp, zbar, Qz](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    const Vector e = mp->h(t, x, y, u, d) - zbar;
    return Matrix((Qz * e).transpose() * mp->dh_dx(t, x, y, u, d));
  };
  q.dq_dy = [mp, zbar, Qz](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    const Vector e = mp->h(t, x, y, u, d) - zbar;
    return Matrix((Qz * e).transpose() * mp->dh_dy(t, x, y, u, d));
  };
  q.dq_du = [mp, zbar, Qz](double t, const Vector& x, const Vector& y, const Vector& u, const Vector& d) {
    const Vector e = mp->h(t, x, y, u, d) - zbar;
    return Matrix((Qz * e).transpose() * mp->dh_du(t, x, y, u, d));
  };
  return q;
}

ShootResult shoot(const Model& model, const Vector& wx, const Vector& wy, const Vector& u,
                  const Vector& d, double tj, double tj1, const Vector& zbar,
                  const OcpConfig& config, bool relax, bool with_sens, esdirk::Integrator& integrator) {
  const Dimensions& n = model.dims();
  if (!model.has_output()) fail(ErrorCode::InvalidArgument, "OCP model needs an output function");
  const Index np = n.nx + n.ny + n.nu;
  const Vector s0 = esdirk::combine(wx, wy);

  const Model relaxed = relax ? relaxed_model(model, tj, tj1, config.eta) : model;
  Vector u_aug = u;
  Matrix du_dp = Matrix::Zero(n.nu, np);
  du_dp.rightCols(n.nu).setIdentity();
  if (relax) {
    u_aug.resize(n.nu + n.ny);
    u_aug << u, model.g(tj, wx, wy, u, d);
    Matrix full = Matrix::Zero(n.nu + n.ny, np);
    full.topRows(n.nu) = du_dp;
    full.block(n.nu, 0, n.ny, n.nx) = model.dg_dx(tj, wx, wy, u, d);
    full.block(n.nu, n.nx, n.ny, n.ny) = model.dg_dy(tj, wx, wy, u, d);
    full.block(n.nu, n.nx + n.ny, n.ny, n.nu) = model.dg_du(tj, wx, wy, u, d);
    du_dp = std::move(full);
  }
  if (!u_aug.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "node residual is not finite");

  const esdirk::Quadrature quad = tracking_cost(relaxed, zbar, config.Qz);
  esdirk::Sensitivity sens;
  if (with_sens) {
    sens.ds_dp = Matrix::Zero(n.ns(), np);
    sens.ds_dp.leftCols(n.ns()).setIdentity();
    sens.du_dp = std::move(du_dp);
  }

  const long before = integrator.stats().newton_corrections;
  const esdirk::Trajectory traj = integrator.integrate(relaxed, tj, tj1, s0, u_aug, d,
                                                       config.steps_per_interval,
                                                       with_sens ? &sens : nullptr, &quad);
  ShootResult out;
  out.endpoint = traj.s.back();
  out.cost = traj.q[0];
  if (with_sens) {
    out.ds_dp = std::move(sens.ds_dp);
    out.dcost_dp = std::move(sens.dq_dp);
  }
  out.newton_corrections = integrator.stats().newton_corrections - before;
  return out;
}

NlpEvaluation evaluate(const Model& model, const Vector& w, const OcpData& data,
                       const OcpConfig& config, bool with_sens) {
  const Dimensions& n = model.dims();
  config.validate(n);
  const Layout L(n, config.N);
  const int N = config.N;
  if (w.size() != L.size()) fail(ErrorCode::DimensionMismatch, "decision vector has the wrong length");
  if (!w.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "decision vector is not finite");
  if (data.x_init.size() != n.nx || data.u_prev.size() != n.nu) {
    fail(ErrorCode::DimensionMismatch, "OCP data: initial state or previous input size");
  }
  if (static_cast<int>(data.d.size()) != N || static_cast<int>(data.zbar.size()) != N + 1) {
    fail(ErrorCode::DimensionMismatch, "OCP data needs N disturbances and N+1 setpoints");
  }

  NlpEvaluation ev;
  ev.b = Vector::Zero(L.constraints());
  if (with_sens) {
    ev.grad = Vector::Zero(L.size());
    ev.B = Matrix::Zero(L.constraints(), L.size());
  }
  const Index np = n.nx + n.ny + n.nu;

  ev.b.head(n.nx) = w.segment(L.x(0), n.nx) - data.x_init;
  if (with_sens) ev.B.block(0, L.x(0), n.nx, n.nx).setIdentity();

  esdirk::Integrator integrator(config.method, config.newton);
  for (int j = 0; j < N; ++j) {
    const double tj = data.t0 + j * config.Ts;
    const Vector wx = w.segment(L.x(j), n.nx);
    const Vector wy = w.segment(L.y(j), n.ny);
    const Vector uj = w.segment(L.u(j), n.nu);
    ShootResult sr;
    try {
      sr = shoot(model, wx, wy, uj, data.d[j], tj, tj + config.Ts, data.zbar[j], config, true,
                 with_sens, integrator);
    } catch (const Error& e) {
      throw Error(ErrorCode::IntegrationFailure,
                  "shooting interval " + std::to_string(j) + ": " + e.what());
    }
    ev.phi += sr.cost;
    ev.newton_corrections += sr.newton_corrections;

    const Index row = L.match_row(j);
    ev.b.segment(row, n.nx) = sr.endpoint.head(n.nx) - w.segment(L.x(j + 1), n.nx);
    ev.b.segment(row + n.nx, n.ny) = model.g(tj, wx, wy, uj, data.d[j]);
    if (with_sens) {
      ev.grad.segment(L.x(j), np) += sr.dcost_dp.row(0).transpose();
      ev.B.block(row, L.x(j), n.nx, np) = sr.ds_dp.topRows(n.nx);
      ev.B.block(row, L.x(j + 1), n.nx, n.nx) = -Matrix::Identity(n.nx, n.nx);
      ev.B.block(row + n.nx, L.x(j), n.ny, n.nx) = model.dg_dx(tj, wx, wy, uj, data.d[j]);
      ev.B.block(row + n.nx, L.y(j), n.ny, n.ny) = model.dg_dy(tj, wx, wy, uj, data.d[j]);
      ev.B.block(row + n.nx, L.u(j), n.ny, n.nu) = model.dg_du(tj, wx, wy, uj, data.d[j]);
    }
  }

  const Matrix Qdu = config.Qdu_bar();
  for (int j = 0; j < N; ++j) {
    const Vector prev = j == 0 ? data.u_prev : Vector(w.segment(L.u(j - 1), n.nu));
    const Vector du = w.segment(L.u(j), n.nu) - prev;
    const Vector Qd = Qdu * du;
    ev.phi += 0.5 * du.dot(Qd);
    if (with_sens) {
      ev.grad.segment(L.u(j), n.nu) += Qd;
      if (j > 0) ev.grad.segment(L.u(j - 1), n.nu) -= Qd;
    }
  }

  const double tN = data.t0 + N * config.Ts;
  const TerminalOutput term =
      terminal_output(model, tN, w.segment(L.x(N), n.nx), w.segment(L.y(N - 1), n.ny),
                      w.segment(L.u(N - 1), n.nu), data.d[N - 1]);
  const Vector e = term.z - data.zbar[N];
  const Vector Qe = config.Qz_bar() * e;
  ev.phi += 0.5 * e.dot(Qe);
  if (with_sens) {
    ev.grad.segment(L.x(N), n.nx) += term.dz_dx.transpose() * Qe;
    ev.grad.segment(L.u(N - 1), n.nu) += term.dz_du.transpose() * Qe;
  }
  return ev;
}

// Lagrange multiplier estimate from the state block and the projected
// stationarity of the remaining input components.
double kkt_stationarity(const NlpEvaluation& ev, const Vector& w, const Layout& L,
                        const OcpConfig& config, Vector& lambda, Vector& grad_lagrangian) {
  const qp::Partition part = L.partition();
  const Index nv = static_cast<Index>(part.eliminated.size());
  Matrix Bv(ev.B.rows(), nv);
  Vector gv(nv);
  for (Index j = 0; j < nv; ++j) {
    Bv.col(j) = ev.B.col(part.eliminated[j]);
    gv[j] = ev.grad[part.eliminated[j]];
  }
  lambda = -Eigen::PartialPivLU<Matrix>(Bv.transpose()).solve(gv);
  grad_lagrangian = ev.grad + ev.B.transpose() * lambda;
  const Vector& gl = grad_lagrangian;
  double worst = 0.0;
  for (int j = 0; j < L.N(); ++j) {
    for (Index i = 0; i < L.nu(); ++i) {
      const Index k = L.u(j) + i;
      double r = gl[k];
      const double span = std::max(1.0, std::abs(config.u_max[i] - config.u_min[i]));
      if (w[k] <= config.u_min[i] + 1e-12 * span) r = std::min(r, 0.0);
      if (w[k] >= config.u_max[i] - 1e-12 * span) r = std::max(r, 0.0);
      worst = std::max(worst, std::abs(r));
    }
  }
  if (!lambda.allFinite()) fail(ErrorCode::RankDeficientConstraints, "multiplier estimate is not finite");
  return worst;
}

}  // namespace

ShootResult shoot_interval(const Model& model, const Vector& wx, const Vector& wy,
                           const Vector& u, const Vector& d, double tj, double tj1,
                           const Vector& zbar, const OcpConfig& config, bool relax) {
  esdirk::Integrator integrator(config.method, config.newton);
  OcpConfig local = config;
  local.Ts = tj1 - tj;
  try {
    return shoot(model, wx, wy, u, d, tj, tj1, zbar, local, relax, true, integrator);
  } catch (const Error& e) {
    throw Error(ErrorCode::IntegrationFailure, std::string("shooting interval: ") + e.what());
  }
}

TerminalOutput terminal_output(const Model& model, double tN, const Vector& xN, const Vector& y_guess,
                               const Vector& u, const Vector& d) {
  const Dimensions& n = model.dims();
  TerminalOutput out;
  out.y = solve_consistent_algebraic(model, tN, xN, u, d, y_guess);
  out.z = model.h(tN, xN, out.y, u, d);
  out.dz_dx = model.dh_dx(tN, xN, out.y, u, d);
  out.dz_du = model.dh_du(tN, xN, out.y, u, d);
  if (n.ny > 0) {
    const LuFactor gy(model.dg_dy(tN, xN, out.y, u, d), "dg/dy at the terminal node");
    const Matrix hy = model.dh_dy(tN, xN, out.y, u, d);
    out.dz_dx.noalias() -= hy * gy.solve(Matrix(model.dg_dx(tN, xN, out.y, u, d)));
    out.dz_du.noalias() -= hy * gy.solve(Matrix(model.dg_du(tN, xN, out.y, u, d)));
  }
  return out;
}

NlpEvaluation eval_nlp(const Model& model, const Vector& w, const OcpData& data,
                       const OcpConfig& config) {
  return evaluate(model, w, data, config, true);
}

NlpEvaluation eval_nlp_values(const Model& model, const Vector& w, const OcpData& data,
                              const OcpConfig& config) {
  return evaluate(model, w, data, config, false);
}

namespace {

// Exact Hessian of the move penalty in the input coordinates u_0 .. u_{N-1}.
Matrix move_hessian(int N, const Matrix& Q) {
  const Index nu = Q.rows();
  Matrix H = Matrix::Zero(N * nu, N * nu);
  for (int j = 0; j < N; ++j) {
    H.block(j * nu, j * nu, nu, nu) += Q;
    if (j > 0) {
      H.block((j - 1) * nu, (j - 1) * nu, nu, nu) += Q;
      H.block(j * nu, (j - 1) * nu, nu, nu) -= Q;
      H.block((j - 1) * nu, j * nu, nu, nu) -= Q;
    }
  }
  return H;
}

Vector inputs_of(const Vector& w, const Layout& L) {
  Vector u(L.N() * L.nu());
  for (int j = 0; j < L.N(); ++j) u.segment(j * L.nu(), L.nu()) = w.segment(L.u(j), L.nu());
  return u;
}

}  // namespace

Matrix full_space_hessian(const Layout& layout, const OcpConfig& config, const Matrix& reduced) {
  const Index m = layout.N() * layout.nu();
  if (reduced.rows() != m || reduced.cols() != m) fail(ErrorCode::DimensionMismatch, "reduced Hessian size");
  const Matrix Hu = move_hessian(layout.N(), config.Qdu_bar()) + reduced;
  Matrix H = Matrix::Zero(layout.size(), layout.size());
  const Index nu = layout.nu();
  for (int i = 0; i < layout.N(); ++i) {
    for (int j = 0; j < layout.N(); ++j) {
      H.block(layout.u(i), layout.u(j), nu, nu) = Hu.block(i * nu, j * nu, nu, nu);
    }
  }
  return H;
}

SqpResult sqp_solve(const Model& model, const Vector& w0, const OcpData& data,
                    const OcpConfig& config, const SqpSettings& settings,
                    const Matrix* initial_hessian) {
  const Dimensions& n = model.dims();
  config.validate(n);
  const Layout L(n, config.N);
  const qp::Partition part = L.partition();
  const Index nk = static_cast<Index>(part.kept.size());
  const Index nv = static_cast<Index>(part.eliminated.size());
  const Index stride = n.nx + n.ny + n.nu;
  if (w0.size() != L.size()) fail(ErrorCode::DimensionMismatch, "SQP start has the wrong length");
  for (int j = 0; j < L.N(); ++j) {
    for (Index i = 0; i < n.nu; ++i) {
      const double v = w0[L.u(j) + i];
      if (v < config.u_min[i] || v > config.u_max[i]) {
        fail(ErrorCode::InvalidArgument, "SQP start violates the input bounds");
      }
    }
  }

  SqpResult res;
  res.w = w0;
  NlpEvaluation ev = eval_nlp(model, res.w, data, config);
  res.evaluations = 1;
  res.newton_corrections = ev.newton_corrections;

  // Rows with large Jacobian entries (e.g. power balances in W) are scaled
  // down so that roundoff in them does not dominate merit and termination.
  Vector row_scale(ev.b.size());
  for (Index i = 0; i < ev.b.size(); ++i) {
    const double big = ev.B.row(i).lpNorm<Eigen::Infinity>();
    row_scale[i] = big > settings.row_scale_threshold ? settings.row_scale_threshold / big : 1.0;
  }
  auto scale_rows = [&row_scale](NlpEvaluation& e) {
    e.b.array() *= row_scale.array();
    e.B = row_scale.asDiagonal() * e.B;
  };
  scale_rows(ev);

  const Index m = nk;
  const Matrix H_move = move_hessian(L.N(), config.Qdu_bar());
  Matrix Hr = Matrix::Identity(m, m);
  bool scaled = false;
  if (initial_hessian != nullptr) {
    if (initial_hessian->rows() != m || initial_hessian->cols() != m) {
      fail(ErrorCode::DimensionMismatch, "initial Hessian has the wrong size");
    }
    Hr = *initial_hessian;
    scaled = true;
  }

  double mu = 0.0;
  Vector lambda, gl;
  res.active.assign(nk, qp::Bound::Free);
  res.kkt = kkt_stationarity(ev, res.w, L, config, lambda, gl);

  for (int it = 0;; ++it) {
    res.iterations = it;
    res.objective = ev.phi;
    res.infeasibility = ev.b.lpNorm<Eigen::Infinity>();
    res.multipliers = lambda;
    const double stat_tol = settings.tolerance * std::max(1.0, ev.grad.lpNorm<Eigen::Infinity>());
    if (res.kkt <= stat_tol && res.infeasibility <= settings.tolerance) {
      res.status = SqpStatus::Converged;
      break;
    }
    if (it == settings.max_iterations) {
      res.status = SqpStatus::MaxIterations;
      spdlog::warn("SQP stopped after {} iterations (stationarity {:.3e}, infeasibility {:.3e})",
                   it, res.kkt, res.infeasibility);
      break;
    }

    Vector lo(nk), hi(nk);
    for (Index k = 0; k < nk; ++k) {
      const Index i = (part.kept[k] - L.u(0)) % stride;
      lo[k] = config.u_min[i] - res.w[part.kept[k]];
      hi[k] = config.u_max[i] - res.w[part.kept[k]];
    }
    const Matrix H = full_space_hessian(L, config, Hr);
    Matrix Bv(ev.B.rows(), nv);
    for (Index j = 0; j < nv; ++j) Bv.col(j) = ev.B.col(part.eliminated[j]);
    const Eigen::PartialPivLU<Matrix> Bv_lu(Bv);
    const qp::QpResult step = qp::solve_qp(H, ev.grad, ev.B, ev.b, lo, hi, part, res.active);
    res.active = step.active;

    mu = std::max(mu, settings.penalty_factor * step.multipliers.lpNorm<Eigen::Infinity>());
    const double merit0 = ev.phi + mu * ev.b.lpNorm<1>();
    if (res.merit.empty()) res.merit.push_back(merit0);
    const double slope = ev.grad.dot(step.step) - mu * ev.b.lpNorm<1>();

    double alpha = 1.0;
    Vector w_trial;
    NlpEvaluation trial;
    auto evaluate = [&](const Vector& w) {
      try {
        trial = eval_nlp(model, w, data, config);
        scale_rows(trial);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::IntegrationFailure && e.code() != ErrorCode::NoConvergence &&
            e.code() != ErrorCode::DomainError && e.code() != ErrorCode::NonFiniteEvaluation) {
          throw;
        }
        ++res.evaluations;
        return false;
      }
      ++res.evaluations;
      res.newton_corrections += trial.newton_corrections;
      return true;
    };
    auto accepted = [&](double a) {
      const double merit = trial.phi + mu * trial.b.lpNorm<1>();
      if (merit > merit0 + settings.armijo * a * std::min(slope, 0.0)) return false;
      res.merit.push_back(merit);
      return true;
    };
    for (;;) {
      w_trial = res.w + alpha * step.step;
      for (Index k = 0; k < nk; ++k) {
        const Index i = (part.kept[k] - L.u(0)) % stride;
        w_trial[part.kept[k]] = std::clamp(w_trial[part.kept[k]], config.u_min[i], config.u_max[i]);
      }
      const bool ok = evaluate(w_trial);
      if (ok && accepted(alpha)) break;
      if (ok && alpha == 1.0 && settings.second_order_correction) {
        // Second-order correction: move the eliminated components so that the
        // linearized constraints absorb the curvature seen at the full step.
        Vector soc = w_trial;
        const Vector dv = Bv_lu.solve(-trial.b);
        for (Index j = 0; j < nv; ++j) soc[part.eliminated[j]] += dv[j];
        if (evaluate(soc) && accepted(alpha)) {
          w_trial = std::move(soc);
          break;
        }
      }
      alpha *= settings.backtrack;
      if (alpha < settings.min_step) {
        fail(ErrorCode::LineSearchFailure,
             "SQP line search failed at iteration " + std::to_string(it));
      }
    }

    // Damped BFGS on the reduced Lagrangian gradient in the inputs. The move
    // penalty is exact and excluded from y.
    Vector gl_new;
    Vector lambda_new;
    res.kkt = kkt_stationarity(trial, w_trial, L, config, lambda_new, gl_new);
    const Vector s = inputs_of(w_trial, L) - inputs_of(res.w, L);
    Vector y = inputs_of(gl_new, L) - inputs_of(gl, L) - H_move * s;
    if (s.squaredNorm() > 0.0) {
      double sy = s.dot(y);
      if (!scaled && sy > 0.0) {
        Hr = (y.squaredNorm() / sy) * Matrix::Identity(m, m);
        scaled = true;
      }
      const Vector Bs = Hr * s;
      const double sBs = s.dot(Bs);
      if (sBs > 0.0) {
        if (sy < settings.damping * sBs) {
          const double theta = (1.0 - settings.damping) * sBs / (sBs - sy);
          y = theta * y + (1.0 - theta) * Bs;
          sy = s.dot(y);
        }
        Hr += y * y.transpose() / sy - Bs * Bs.transpose() / sBs;
        Hr = 0.5 * (Hr + Hr.transpose()).eval();
      }
    }

    spdlog::debug("sqp {:3d}: phi {:.6e} |b| {:.2e} kkt {:.2e} alpha {:.2e} |dw| {:.2e} mu {:.2e}",
                  it, trial.phi, trial.b.lpNorm<Eigen::Infinity>(), res.kkt, alpha,
                  step.step.lpNorm<Eigen::Infinity>(), mu);
    res.w = std::move(w_trial);
    ev = std::move(trial);
    lambda = std::move(lambda_new);
    gl = std::move(gl_new);
  }
  res.hessian = std::move(Hr);
  res.multipliers = res.multipliers.cwiseProduct(row_scale);
  res.infeasibility = (ev.b.array() / row_scale.array()).matrix().lpNorm<Eigen::Infinity>();
  return res;
}

namespace {

std::vector<Index> shift_map(const Layout& L) {
  std::vector<Index> src(L.size());
  const Index stride = L.nx() + L.ny() + L.nu();
  const int N = L.N();
  for (int j = 0; j + 1 < N; ++j) {
    for (Index i = 0; i < stride; ++i) src[L.x(j) + i] = L.x(j + 1) + i;
  }
  for (Index i = 0; i < L.nx(); ++i) src[L.x(N - 1) + i] = L.x(N) + i;
  for (Index i = 0; i < L.ny(); ++i) src[L.y(N - 1) + i] = L.y(N - 1) + i;
  for (Index i = 0; i < L.nu(); ++i) src[L.u(N - 1) + i] = L.u(N - 1) + i;
  for (Index i = 0; i < L.nx(); ++i) src[L.x(N) + i] = L.x(N) + i;
  return src;
}

}  // namespace

Vector warm_start_shift(const Vector& w, const Layout& layout) {
  if (w.size() != layout.size()) fail(ErrorCode::DimensionMismatch, "shift: wrong length");
  const std::vector<Index> src = shift_map(layout);
  Vector out(w.size());
  for (Index k = 0; k < w.size(); ++k) out[k] = w[src[k]];
  return out;
}

Matrix shift_hessian(const Matrix& H, const Layout& layout) {
  const Index nu = layout.nu();
  const Index m = layout.N() * nu;
  if (H.rows() != m || H.cols() != m) fail(ErrorCode::DimensionMismatch, "shift: Hessian has the wrong size");
  std::vector<Index> map(m);
  for (int j = 0; j < layout.N(); ++j) {
    const int src = std::min(j + 1, layout.N() - 1);
    for (Index i = 0; i < nu; ++i) map[j * nu + i] = src * nu + i;
  }
  Matrix out(m, m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) out(a, b) = H(map[a], map[b]);
  }
  // The duplicated last input keeps only its diagonal block.
  const Index last = (layout.N() - 1) * nu;
  if (layout.N() > 1) {
    out.block(last, 0, nu, last).setZero();
    out.block(0, last, last, nu).setZero();
  }
  return out;
}

Vector replicate_initial(const Layout& layout, const Vector& x0, const Vector& y0, const Vector& u0) {
  std::vector<Vector> x(layout.N() + 1, x0), y(layout.N(), y0), u(layout.N(), u0);
  return layout.pack(x, y, u);
}

}  // namespace sdae::ocp
