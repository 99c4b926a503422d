#include "sdae/newton.hpp"

#include "sdae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdae {

double NewtonSettings::scaled_norm(const Vector& residual, const Vector& iterate) const {
  double norm = 0.0;
  for (Index j = 0; j < residual.size(); ++j) {
    const double scale = std::max(abs, rel * std::abs(iterate[j]));
    norm = std::max(norm, std::abs(residual[j]) / scale);
  }
  return norm;
}

LuFactor::LuFactor(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    fail(ErrorCode::SingularJacobian, std::string(what) + " has non-finite entries");
  }
  lu_.compute(a);
  // rcond() is an estimate; anything below a few ulps is treated as singular.
  const double rcond = lu_.rcond();
  if (!(rcond > 10.0 * std::numeric_limits<double>::epsilon()) && a.rows() > 0) {
    fail(ErrorCode::SingularJacobian,
         std::string(what) + " is singular (rcond " + std::to_string(rcond) + ")");
  }
}

}  // namespace sdae
