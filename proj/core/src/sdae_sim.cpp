#include "sdae/sdae_sim.hpp"

#include "sdae/errors.hpp"

#include <random>
#include <string>

namespace sdae::sim {

namespace {

constexpr std::uint64_t kMeasurementStream = 0xffffffffull;

Vector draw(std::uint64_t seed, std::uint64_t k, std::uint64_t n, Index dim, double scale) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(dim);
  for (Index i = 0; i < dim; ++i) out[i] = scale * normal(rng);
  return out;
}

}  // namespace

Vector WienerPath::increment(std::uint64_t k, std::uint64_t n, Index nw, double dt) const {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "Wiener increment needs dt > 0");
  return draw(seed_, k, n, nw, std::sqrt(dt));
}

Vector WienerPath::normal(std::uint64_t k, Index dim) const {
  return draw(seed_, k, kMeasurementStream, dim, 1.0);
}

Vector implicit_explicit_step(const Model& model, double t0, const Vector& s0, const Vector& u,
                              const Vector& d, double dt, const Vector& dw,
                              const NewtonSettings& newton) {
  const Dimensions& n = model.dims();
  if (s0.size() != n.ns() || dw.size() != n.nw) {
    fail(ErrorCode::DimensionMismatch, "implicit-explicit step: state or noise size");
  }
  if (!s0.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "implicit-explicit step: state");

  const double t1 = t0 + dt;
  const Vector rhs = s0.head(n.nx) + model.sigma() * dw;
  Vector s = s0;
  Matrix J(n.ns(), n.ns());
  for (int it = 0;; ++it) {
    const Vector x = s.head(n.nx);
    const Vector y = s.tail(n.ny);
    Vector r(n.ns());
    r.head(n.nx) = x - model.f(t1, x, y, u, d) * dt - rhs;
    r.tail(n.ny) = model.g(t1, x, y, u, d);
    if (!r.allFinite()) fail(ErrorCode::NonFiniteEvaluation, "implicit-explicit step: residual");
    if (newton.scaled_norm(r, s) < newton.tau) return s;
    if (it == newton.max_iterations) {
      fail(ErrorCode::NoConvergence, "implicit-explicit step did not converge at t = " + std::to_string(t1));
    }
    J.topLeftCorner(n.nx, n.nx) = Matrix::Identity(n.nx, n.nx) - dt * model.df_dx(t1, x, y, u, d);
    J.topRightCorner(n.nx, n.ny) = -dt * model.df_dy(t1, x, y, u, d);
    J.bottomLeftCorner(n.ny, n.nx) = model.dg_dx(t1, x, y, u, d);
    J.bottomRightCorner(n.ny, n.ny) = model.dg_dy(t1, x, y, u, d);
    s -= LuFactor(J, "implicit-explicit Jacobian").solve(r);
  }
}

IntervalResult simulate_interval(const Model& model, double tk, const Vector& sk, const Vector& u,
                                 const Vector& d, double Ts, const SimConfig& config,
                                 const WienerPath& path, std::uint64_t k) {
  if (config.steps < 1) fail(ErrorCode::InvalidArgument, "simulator needs at least one inner step");
  const double dt = Ts / config.steps;
  const Index nw = model.dims().nw;
  IntervalResult out;
  out.inner.reserve(config.steps + 1);
  out.inner.push_back(sk);
  for (int n = 0; n < config.steps; ++n) {
    const Vector dw = nw > 0 ? path.increment(k, n, nw, dt) : Vector();
    out.inner.push_back(
        implicit_explicit_step(model, tk + n * dt, out.inner.back(), u, d, dt, dw, config.newton));
  }
  out.s = out.inner.back();
  return out;
}

}  // namespace sdae::sim
