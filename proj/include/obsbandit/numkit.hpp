#pragma once

// Dense symmetric linear-algebra kernels shared by every other module:
// factorization, eigen-extremes, SPD solves, rank-one updates and
// projections. Everything here is a pure function of its inputs; matrices
// are small (a few hundred rows at most), so all paths are dense.

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "obsbandit/errors.hpp"

namespace obsbandit::numkit {

/// Pivots in [-kPivotClamp, 0] are treated as exact zeros during
/// factorization; anything below is a hard failure.
inline constexpr double kPivotClamp = 1e-10;

/// Symmetric real matrix. Construction symmetrizes, so the stored matrix
/// satisfies m == m^T exactly.
template <typename Scalar>
class SymMatrixT {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SymMatrixT() = default;

  template <typename Derived>
  explicit SymMatrixT(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("SymMatrix requires a square matrix");
    }
    mat_ = (m + m.transpose()) / Scalar(2);
  }

  static SymMatrixT Identity(Eigen::Index dim) {
    return SymMatrixT(Matrix::Identity(dim, dim));
  }

  template <typename Derived>
  static SymMatrixT Diagonal(const Eigen::MatrixBase<Derived>& d) {
    return SymMatrixT(Matrix(d.asDiagonal()));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }

 private:
  Matrix mat_;
};

using SymMatrix = SymMatrixT<double>;

/// Rank-one projector onto the span of a single direction. The stored
/// direction is unit-norm, which makes the projector idempotent.
template <typename Scalar>
class ProjectionT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename Derived>
  explicit ProjectionT(const Eigen::MatrixBase<Derived>& direction) {
    const Scalar norm = direction.norm();
    if (!(norm > Scalar(0))) {
      throw ZeroDirection("projection direction must be nonzero");
    }
    dir_ = direction / norm;
  }

  const Vector& direction() const { return dir_; }

  /// The projector as a dense matrix, dir * dir^T.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix() const {
    return dir_ * dir_.transpose();
  }

 private:
  Vector dir_;
};

using Projection = ProjectionT<double>;

/// v |-> direction * (direction^T v).
template <typename Scalar, typename Derived>
typename ProjectionT<Scalar>::Vector project(const ProjectionT<Scalar>& p,
                                             const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != p.direction().size()) {
    throw DimensionMismatch("projection/vector dimension mismatch");
  }
  return p.direction() * (p.direction().dot(v));
}

/// Lower-triangular Cholesky factor L with L L^T = m. Semidefinite inputs
/// are handled by clamping pivots in [-kPivotClamp, 0] to zero; a pivot
/// below -kPivotClamp throws NotPositiveDefinite. If `clamped` is given it
/// reports whether any pivot was clamped (i.e. the input was semidefinite
/// rather than strictly positive definite).
template <typename Scalar>
typename SymMatrixT<Scalar>::Matrix cholesky(const SymMatrixT<Scalar>& m,
                                             bool* clamped = nullptr) {
  using Matrix = typename SymMatrixT<Scalar>::Matrix;
  const Eigen::Index n = m.dim();
  const Matrix& a = m.matrix();
  Matrix ell = Matrix::Zero(n, n);
  if (clamped != nullptr) *clamped = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    Scalar pivot = a(j, j) - ell.row(j).head(j).squaredNorm();
    if (pivot < Scalar(-kPivotClamp)) {
      throw NotPositiveDefinite("negative pivot in Cholesky factorization");
    }
    if (pivot < Scalar(0)) pivot = Scalar(0);
    if (pivot == Scalar(0) && clamped != nullptr) *clamped = true;
    const Scalar diag = std::sqrt(pivot);
    ell(j, j) = diag;
    if (diag > Scalar(0)) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        ell(i, j) = (a(i, j) - ell.row(i).head(j).dot(ell.row(j).head(j))) / diag;
      }
    }
    // diag == 0: in a PSD matrix the Schur complement column is zero too.
  }
  return ell;
}

template <typename Scalar>
bool is_psd(const SymMatrixT<Scalar>& m) {
  try {
    cholesky(m);
    return true;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

/// Strict positive definiteness: factorization succeeds with no clamped pivot.
template <typename Scalar>
bool is_pd(const SymMatrixT<Scalar>& m) {
  try {
    bool clamped = false;
    cholesky(m, &clamped);
    return !clamped;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

struct EigExtremes {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Smallest and largest eigenvalues via a dense symmetric solver.
template <typename Scalar>
EigExtremes eig_extremes(const SymMatrixT<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<typename SymMatrixT<Scalar>::Matrix> es(
      m.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NonConvergence("symmetric eigensolver did not converge");
  }
  const auto& vals = es.eigenvalues();
  return EigExtremes{static_cast<double>(vals(0)),
                     static_cast<double>(vals(vals.size() - 1))};
}

/// Solve L L^T x = b given the lower factor L.
template <typename Scalar, typename Derived>
typename SymMatrixT<Scalar>::Vector solve_cholesky(
    const typename SymMatrixT<Scalar>::Matrix& ell,
    const Eigen::MatrixBase<Derived>& b) {
  if (b.size() != ell.rows()) {
    throw DimensionMismatch("solve_cholesky dimension mismatch");
  }
  typename SymMatrixT<Scalar>::Vector y =
      ell.template triangularView<Eigen::Lower>().solve(b);
  return ell.transpose().template triangularView<Eigen::Upper>().solve(y);
}

/// Solve m x = b for SPD m without forming an inverse.
template <typename Scalar, typename Derived>
typename SymMatrixT<Scalar>::Vector solve_spd(const SymMatrixT<Scalar>& m,
                                              const Eigen::MatrixBase<Derived>& b) {
  if (b.size() != m.dim()) {
    throw DimensionMismatch("solve_spd dimension mismatch");
  }
  return solve_cholesky<Scalar>(cholesky(m), b);
}

/// Matrix right-hand-side variant of solve_spd.
template <typename Scalar, typename Derived>
typename SymMatrixT<Scalar>::Matrix solve_spd_matrix(
    const SymMatrixT<Scalar>& m, const Eigen::MatrixBase<Derived>& b) {
  if (b.rows() != m.dim()) {
    throw DimensionMismatch("solve_spd_matrix dimension mismatch");
  }
  const auto ell = cholesky(m);
  typename SymMatrixT<Scalar>::Matrix y =
      ell.template triangularView<Eigen::Lower>().solve(b.eval());
  return ell.transpose().template triangularView<Eigen::Upper>().solve(y);
}

/// In-place rank-one update of a lower Cholesky factor:
/// L L^T + v v^T = L' L'^T. Runs in O(n^2) via Givens-style rotations.
template <typename Scalar>
void chol_rank_one_update(typename SymMatrixT<Scalar>::Matrix& ell,
                          typename SymMatrixT<Scalar>::Vector v) {
  const Eigen::Index n = ell.rows();
  if (v.size() != n) {
    throw DimensionMismatch("chol_rank_one_update dimension mismatch");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar lkk = ell(k, k);
    const Scalar r = std::hypot(lkk, v(k));
    if (r == Scalar(0)) continue;  // zero column and zero v entry
    if (lkk == Scalar(0)) {
      throw NotPositiveDefinite("rank-one update of a singular factor");
    }
    const Scalar c = r / lkk;
    const Scalar s = v(k) / lkk;
    ell(k, k) = r;
    if (k + 1 < n) {
      auto tail = ell.col(k).segment(k + 1, n - k - 1);
      auto vtail = v.segment(k + 1, n - k - 1);
      tail = (tail + s * vtail) / c;
      vtail = c * vtail - s * tail;
    }
  }
}

/// Symmetric inverse square root m^{-1/2} of a PD matrix, via the
/// eigendecomposition. Used to whiten observations.
template <typename Scalar>
typename SymMatrixT<Scalar>::Matrix sym_inv_sqrt(const SymMatrixT<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<typename SymMatrixT<Scalar>::Matrix> es(m.matrix());
  if (es.info() != Eigen::Success) {
    throw NonConvergence("symmetric eigensolver did not converge");
  }
  const auto& vals = es.eigenvalues();
  if (vals(0) <= Scalar(kPivotClamp)) {
    throw NotPositiveDefinite("inverse square root of a singular matrix");
  }
  return es.eigenvectors() * vals.array().rsqrt().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace obsbandit::numkit
