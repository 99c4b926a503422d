#pragma once

#include "sdae/model.hpp"
#include "sdae/newton.hpp"

#include <cstdint>
#include <vector>

namespace sdae::sim {

/// Inner stepping of the plant simulator over one sampling interval.
struct SimConfig {
  int steps = 20;  ///< M, uniform dt = T_s / M
  NewtonSettings newton{1e-3, 1e-8, 1e-8, 50};
};

/// Brownian increments for one sampling interval, regenerated from
/// (seed, k, n) so any interval can be reproduced in isolation.
class WienerPath {
 public:
  explicit WienerPath(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Increment N(0, dt I) of dimension nw for inner step n of interval k.
  Vector increment(std::uint64_t k, std::uint64_t n, Index nw, double dt) const;

  /// Standard normal sample of dimension dim on a separate stream, used for
  /// measurement noise at sampling instant k.
  Vector normal(std::uint64_t k, Index dim) const;

 private:
  std::uint64_t seed_;
};

/// Solves, by exact Newton,
///   x1 - x0 - f(t1, x1, y1, u, d) dt - sigma dw = 0,   g(t1, x1, y1, u, d) = 0.
/// Starts from s0.
Vector implicit_explicit_step(const Model& model, double t0, const Vector& s0, const Vector& u,
                              const Vector& d, double dt, const Vector& dw,
                              const NewtonSettings& newton = SimConfig{}.newton);

struct IntervalResult {
  Vector s;                   ///< s_{k+1}
  std::vector<Vector> inner;  ///< s_{k,0}, ..., s_{k,M}
};

/// M implicit-explicit steps over [t_k, t_k + T_s], noise taken from `path`
/// for interval index k.
IntervalResult simulate_interval(const Model& model, double tk, const Vector& sk, const Vector& u,
                                 const Vector& d, double Ts, const SimConfig& config,
                                 const WienerPath& path, std::uint64_t k);

}  // namespace sdae::sim
