#pragma once

#include "robstat/datamodel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace robstat::detail {

/// Scatter matrices whose condition number reaches this are treated as singular.
inline constexpr double kSingularCondition = 1e12;

struct MeanCov {
  Vector mean;
  Matrix cov;
};

/// Mean and covariance (divisor = number of rows) of the listed rows.
template <typename Derived>
MeanCov mean_cov(const Eigen::MatrixBase<Derived>& x, const std::vector<Index>& rows) {
  const auto m = static_cast<double>(rows.size());
  Vector mu = Vector::Zero(x.cols());
  for (Index r : rows) mu += x.row(r).transpose();
  mu /= m;
  Matrix centered(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    centered.row(static_cast<Index>(i)) = x.row(rows[i]) - mu.transpose();
  Matrix cov = Matrix::Zero(x.cols(), x.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / m);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return {std::move(mu), std::move(cov)};
}

template <typename Derived>
MeanCov mean_cov(const Eigen::MatrixBase<Derived>& x) {
  std::vector<Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  return mean_cov(x, all);
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Eigendecomposition of a symmetric matrix with the singularity rule applied.
class SymEigen {
 public:
  explicit SymEigen(const Matrix& s) : solver_(symmetrize(s)) {
    const Vector& ev = solver_.eigenvalues();
    const double top = ev(ev.size() - 1);
    singular_ = !(top > 0.0) || ev(0) <= top / kSingularCondition;
  }

  /// Ascending eigenvalues.
  const Vector& values() const { return solver_.eigenvalues(); }
  const Matrix& vectors() const { return solver_.eigenvectors(); }
  bool singular() const { return singular_; }
  double largest() const { return values()(values().size() - 1); }

  double log_det() const {
    if (singular_) return -std::numeric_limits<double>::infinity();
    return values().array().log().sum();
  }

  double det() const {
    if (!(largest() > 0.0)) return 0.0;
    double d = 1.0;
    for (Index i = 0; i < values().size(); ++i) d *= std::max(0.0, values()(i));
    return d;
  }

  /// Squared Mahalanobis distances of the rows of `x` around `center`.
  template <typename Derived>
  Vector squared_distances(const Eigen::MatrixBase<Derived>& x, const Vector& center) const {
    const Matrix w = vectors() * values().cwiseSqrt().cwiseInverse().asDiagonal();
    const Matrix z = (x.rowwise() - center.transpose()) * w;
    return z.rowwise().squaredNorm();
  }

  /// Inverse of the matrix; caller checks singular() first.
  Matrix inverse() const {
    return vectors() * values().cwiseInverse().asDiagonal() * vectors().transpose();
  }

  /// Moore-Penrose inverse with eigenvalues below largest/kSingularCondition dropped.
  Matrix pseudo_inverse() const {
    Vector inv = Vector::Zero(values().size());
    const double top = largest();
    for (Index i = 0; i < values().size(); ++i)
      if (top > 0.0 && values()(i) > top / kSingularCondition) inv(i) = 1.0 / values()(i);
    return vectors() * inv.asDiagonal() * vectors().transpose();
  }

 private:
  Eigen::SelfAdjointEigenSolver<Matrix> solver_;
  bool singular_ = false;
};

/// Mahalanobis-type distances of `x` in the subspace spanned by the non-null
/// eigenvectors of `scatter`. Rows whose component along the null space exceeds
/// `off_tol` get +infinity.
template <typename Derived>
Vector subspace_distances(const Eigen::MatrixBase<Derived>& x, const Vector& center,
                          const Matrix& scatter, double off_tol) {
  const SymEigen eig(scatter);
  const double top = eig.largest();
  const Matrix centered = x.rowwise() - center.transpose();
  const Matrix proj = centered * eig.vectors();
  Vector d(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    double in = 0.0, off = 0.0;
    for (Index j = 0; j < proj.cols(); ++j) {
      const double lam = eig.values()(j);
      if (top > 0.0 && lam > top / kSingularCondition) {
        in += proj(i, j) * proj(i, j) / lam;
      } else {
        off += proj(i, j) * proj(i, j);
      }
    }
    d(i) = std::sqrt(off) > off_tol ? std::numeric_limits<double>::infinity() : std::sqrt(in);
  }
  return d;
}

/// Indices of the h smallest entries; ties resolved by lower index. Sorted.
inline std::vector<Index> h_smallest(const Vector& d, Index h) {
  std::vector<Index> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto less = [&d](Index a, Index b) { return d(a) < d(b) || (d(a) == d(b) && a < b); };
  std::nth_element(idx.begin(), idx.begin() + h - 1, idx.end(), less);
  idx.resize(static_cast<std::size_t>(h));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Least-squares solution of design * beta = y restricted to `rows`, via
/// column-pivoted QR. Returns false when the restricted design is rank deficient.
template <typename DX, typename DY>
bool least_squares(const Eigen::MatrixBase<DX>& design, const Eigen::MatrixBase<DY>& y,
                   const std::vector<Index>& rows, Matrix& beta) {
  const Matrix a = select_rows(design, rows);
  const Matrix b = select_rows(y, rows);
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-11);
  if (qr.rank() < a.cols()) return false;
  beta = qr.solve(b);
  return true;
}

/// [x, 1] when `intercept`, x otherwise.
template <typename Derived>
Matrix design_matrix(const Eigen::MatrixBase<Derived>& x, bool intercept) {
  Matrix u(x.rows(), x.cols() + (intercept ? 1 : 0));
  u.leftCols(x.cols()) = x;
  if (intercept) u.col(x.cols()).setOnes();
  return u;
}

/// Frobenius-norm scale of the centered data, used for absolute tolerances.
template <typename Derived>
double data_scale(const Eigen::MatrixBase<Derived>& x) {
  const Vector mu = x.colwise().mean().transpose();
  const double s = (x.rowwise() - mu.transpose()).norm() / std::sqrt(static_cast<double>(x.rows()));
  return std::max(s, std::numeric_limits<double>::min());
}

}  // namespace robstat::detail
