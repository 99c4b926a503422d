#include "sdae/qp.hpp"

#include "sdae/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdae::qp {

BoxQpResult solve_box_qp(const Matrix& H, const Vector& c, const Vector& lo, const Vector& hi,
                         const std::vector<Bound>& active) {
  const Index n = c.size();
  if (H.rows() != n || H.cols() != n || lo.size() != n || hi.size() != n) {
    fail(ErrorCode::DimensionMismatch, "box QP: inconsistent sizes");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) fail(ErrorCode::InfeasibleQP, "box QP: lower bound above upper bound");
  }

  BoxQpResult out;
  out.active.assign(n, Bound::Free);
  out.x = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (!active.empty() && active[i] == Bound::Lower) {
      out.x[i] = lo[i];
      out.active[i] = Bound::Lower;
    } else if (!active.empty() && active[i] == Bound::Upper) {
      out.x[i] = hi[i];
      out.active[i] = Bound::Upper;
    } else {
      out.x[i] = std::clamp(0.0, lo[i], hi[i]);
      if (out.x[i] == lo[i] && lo[i] != 0.0) out.active[i] = Bound::Lower;
      if (out.x[i] == hi[i] && hi[i] != 0.0) out.active[i] = Bound::Upper;
    }
  }

  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const int max_iterations = 10 * static_cast<int>(n) + 50;
  bool stationary = false;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    std::vector<Index> free;
    for (Index i = 0; i < n; ++i) {
      if (out.active[i] == Bound::Free) free.push_back(i);
    }
    const Vector grad = H * out.x + c;

    Vector p = Vector::Zero(n);
    if (!free.empty() && !stationary) {
      const Index nf = static_cast<Index>(free.size());
      Matrix Hff(nf, nf);
      Vector rhs(nf);
      for (Index a = 0; a < nf; ++a) {
        rhs[a] = -grad[free[a]];
        for (Index b = 0; b < nf; ++b) Hff(a, b) = H(free[a], free[b]);
      }
      const Eigen::LLT<Matrix> llt(Hff);
      if (llt.info() != Eigen::Success) {
        fail(ErrorCode::InfeasibleQP, "box QP: reduced Hessian is not positive definite");
      }
      const Vector pf = llt.solve(rhs);
      for (Index a = 0; a < nf; ++a) p[free[a]] = pf[a];
    }

    if (stationary || free.empty()) {
      // Stationary on the working set: release the bound with the worst multiplier.
      Index worst = -1;
      double worst_value = 1e-12 * scale;
      for (Index i = 0; i < n; ++i) {
        const double viol = out.active[i] == Bound::Lower   ? -grad[i]
                            : out.active[i] == Bound::Upper ? grad[i]
                                                            : 0.0;
        if (viol > worst_value) {
          worst_value = viol;
          worst = i;
        }
      }
      if (worst < 0) {
        out.multipliers = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
          if (out.active[i] != Bound::Free) out.multipliers[i] = grad[i];
        }
        return out;
      }
      out.active[worst] = Bound::Free;
      stationary = false;
      continue;
    }

    double alpha = 1.0;
    Index blocking = -1;
    for (Index i = 0; i < n; ++i) {
      if (out.active[i] != Bound::Free) continue;
      if (p[i] < 0.0) {
        const double a = (lo[i] - out.x[i]) / p[i];
        if (a < alpha) {
          alpha = a;
          blocking = i;
        }
      } else if (p[i] > 0.0) {
        const double a = (hi[i] - out.x[i]) / p[i];
        if (a < alpha) {
          alpha = a;
          blocking = i;
        }
      }
    }
    out.x += std::max(alpha, 0.0) * p;
    stationary = blocking < 0;
    if (blocking >= 0) {
      const bool lower = p[blocking] < 0.0;
      out.x[blocking] = lower ? lo[blocking] : hi[blocking];
      out.active[blocking] = lower ? Bound::Lower : Bound::Upper;
    }
    for (Index i = 0; i < n; ++i) out.x[i] = std::clamp(out.x[i], lo[i], hi[i]);
  }
  fail(ErrorCode::MaxIterations, "box QP: active-set iteration limit reached");
}

QpResult solve_qp(const Matrix& H, const Vector& g, const Matrix& B, const Vector& r,
                  const Vector& lo, const Vector& hi, const Partition& partition,
                  const std::vector<Bound>& active) {
  const Index n = g.size();
  const Index m = r.size();
  const Index nv = static_cast<Index>(partition.eliminated.size());
  const Index nk = static_cast<Index>(partition.kept.size());
  if (H.rows() != n || H.cols() != n || B.rows() != m || B.cols() != n || nv + nk != n) {
    fail(ErrorCode::DimensionMismatch, "QP: inconsistent sizes");
  }
  if (nv != m) {
    fail(ErrorCode::RankDeficientConstraints, "QP: eliminated block is not square");
  }
  if (lo.size() != nk || hi.size() != nk) fail(ErrorCode::DimensionMismatch, "QP: bound sizes");

  Matrix Bv(m, nv), Bk(m, nk);
  for (Index j = 0; j < nv; ++j) Bv.col(j) = B.col(partition.eliminated[j]);
  for (Index j = 0; j < nk; ++j) Bk.col(j) = B.col(partition.kept[j]);

  const Eigen::PartialPivLU<Matrix> lu(Bv);
  if (!Bv.allFinite() || !(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon())) {
    fail(ErrorCode::RankDeficientConstraints, "QP: state block of the constraint Jacobian is singular");
  }

  // dw = T du + t0
  Matrix T = Matrix::Zero(n, nk);
  Vector t0 = Vector::Zero(n);
  {
    const Matrix Tv = -lu.solve(Bk);
    const Vector tv = -lu.solve(r);
    for (Index j = 0; j < nv; ++j) {
      T.row(partition.eliminated[j]) = Tv.row(j);
      t0[partition.eliminated[j]] = tv[j];
    }
    for (Index j = 0; j < nk; ++j) T(partition.kept[j], j) = 1.0;
  }

  const Matrix HT = H * T;
  Matrix Hr = T.transpose() * HT;
  Hr = 0.5 * (Hr + Hr.transpose()).eval();
  const Vector cr = T.transpose() * (g + H * t0);

  const BoxQpResult box = solve_box_qp(Hr, cr, lo, hi, active);

  QpResult out;
  out.step = T * box.x + t0;
  out.bound_multipliers = box.multipliers;
  out.active = box.active;
  out.iterations = box.iterations;
  const Vector grad = H * out.step + g;
  Vector grad_v(nv);
  for (Index j = 0; j < nv; ++j) grad_v[j] = grad[partition.eliminated[j]];
  out.multipliers = -Eigen::PartialPivLU<Matrix>(Bv.transpose()).solve(grad_v);
  return out;
}

}  // namespace sdae::qp
