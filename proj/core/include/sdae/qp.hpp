#pragma once

#include "sdae/model.hpp"

#include <vector>

namespace sdae::qp {

/// Bound status of a box-constrained variable.
enum class Bound : signed char { Lower = -1, Free = 0, Upper = 1 };

struct BoxQpResult {
  Vector x;
  Vector multipliers;  ///< >= 0 at lower bounds, <= 0 at upper bounds, 0 when free
  std::vector<Bound> active;
  int iterations = 0;
};

/// Primal active-set method for
///   min 1/2 x^T H x + c^T x   s.t. lo <= x <= hi,
/// H symmetric positive definite. `active` optionally seeds the working set;
/// entries that are not consistent with the bounds are dropped.
/// Throws InfeasibleQP when lo > hi somewhere.
BoxQpResult solve_box_qp(const Matrix& H, const Vector& c, const Vector& lo, const Vector& hi,
                         const std::vector<Bound>& active = {});

/// Partition of the step into components eliminated through the equality
/// constraints (states) and components kept in the condensed problem (inputs).
struct Partition {
  std::vector<Index> eliminated;
  std::vector<Index> kept;
};

struct QpResult {
  Vector step;         ///< full-space dw
  Vector multipliers;  ///< equality multipliers, L = phi + lambda^T b
  Vector bound_multipliers;
  std::vector<Bound> active;
  int iterations = 0;
};

/// Solves
///   min 1/2 dw^T H dw + g^T dw   s.t. B dw + r = 0,  lo <= dw_kept <= hi
/// by eliminating the `eliminated` components with a dense LU of their
/// constraint columns (which must form a square nonsingular block) and solving
/// the condensed box QP in the kept components.
/// Throws RankDeficientConstraints or InfeasibleQP.
QpResult solve_qp(const Matrix& H, const Vector& g, const Matrix& B, const Vector& r,
                  const Vector& lo, const Vector& hi, const Partition& partition,
                  const std::vector<Bound>& active = {});

}  // namespace sdae::qp
