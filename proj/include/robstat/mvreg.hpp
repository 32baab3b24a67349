#pragma once

// MCD regression: least-squares formulas evaluated at robust joint moments of
// (x, y), followed by residual-distance reweighting.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/mcd.hpp"
#include "robstat/outlier_map.hpp"
#include "robstat/unirobust.hpp"

#include <cmath>
#include <vector>

namespace robstat {

struct MvRegFit {
  Matrix B;           ///< p x q slopes
  Vector alpha;       ///< q intercepts
  Matrix sigma_eps;   ///< q x q error scatter
  WeightVector weights;
  Matrix residuals;   ///< n x q
  Vector residual_distances;
  EstimateKind kind = EstimateKind::Raw;
  bool degenerate = false;  ///< sigma_eps singular (exact fit)

  Matrix predict(const Matrix& x) const { return (x * B).rowwise() + alpha.transpose(); }
};

struct MvRegResult {
  MvRegFit raw;
  MvRegFit reweighted;
  McdResult joint;             ///< MCD of the joined (x, y) data
  bool joint_degenerate = false;  ///< every row lies on one hyperplane; classical moments used
};

namespace detail {

inline void finish_residuals(const Matrix& x, const Matrix& y, MvRegFit& f) {
  f.residuals = y - f.predict(x);
  const SymEigen eig(f.sigma_eps);
  f.degenerate = eig.singular();
  if (f.degenerate) {
    // Exact fit: distances within the attained residual subspace.
    f.residual_distances = subspace_distances(f.residuals, Vector::Zero(y.cols()), f.sigma_eps,
                                              1e-9 * std::max(1.0, data_scale(y)));
  } else {
    f.residual_distances = eig.squared_distances(f.residuals, Vector::Zero(y.cols())).cwiseSqrt();
  }
}

}  // namespace detail

/// Regression coefficients implied by joint moments of (x, y):
/// B = Sxx^-1 Sxy, alpha = mu_y - B' mu_x, Sigma_eps = Syy - B' Sxx B.
inline MvRegFit plugin_regression(const Vector& mu, const Matrix& sigma, Index p) {
  const Index q = mu.size() - p;
  const Matrix sxx = sigma.topLeftCorner(p, p);
  const detail::SymEigen eig(sxx);
  if (eig.singular()) throw Error(Errc::SingularXScatter, "x-block of the scatter matrix is singular");
  MvRegFit f;
  f.B = eig.inverse() * sigma.topRightCorner(p, q);
  f.alpha = mu.tail(q) - f.B.transpose() * mu.head(p);
  f.sigma_eps = detail::symmetrize(sigma.bottomRightCorner(q, q) - f.B.transpose() * sxx * f.B);
  return f;
}

/// Weighted LS on rows with residual distance <= sqrt(chi2_{q,cutoff_prob}).
inline MvRegFit reweight_mvreg(const Matrix& x, const Matrix& y, const MvRegFit& raw, double cutoff_prob) {
  const Index n = x.rows(), p = x.cols(), q = y.cols();
  const double cut = chi2_cutoff(q, cutoff_prob);
  WeightVector w(n, false);
  for (Index i = 0; i < n; ++i) w.set(i, raw.residual_distances(i) <= cut);
  if (w.count() < p + 2) {
    throw Error(Errc::TooFewInliers, "only " + std::to_string(w.count()) + " rows pass the cutoff");
  }
  const Matrix u = detail::design_matrix(x, true);
  Matrix theta;
  if (!detail::least_squares(u, y, w.selected(), theta)) {
    throw Error(Errc::SingularXScatter, "weighted design has deficient rank");
  }
  MvRegFit f;
  f.B = theta.topRows(p);
  f.alpha = theta.row(p).transpose();
  const Matrix r = y - u * theta;
  Matrix s = Matrix::Zero(q, q);
  for (Index i = 0; i < n; ++i)
    if (w[i]) s += r.row(i).transpose() * r.row(i);
  const double d1 = trimmed_variance_factor(cutoff_prob, q) * finite_sample_correction(w.count(), n, q);
  f.sigma_eps = d1 * s / static_cast<double>(w.count());
  f.weights = std::move(w);
  f.kind = EstimateKind::Reweighted;
  detail::finish_residuals(x, y, f);
  return f;
}

inline MvRegResult mcd_regression(const Matrix& x, const Matrix& y, const McdConfig& cfg = {}) {
  if (x.rows() != y.rows()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  const Index n = x.rows(), p = x.cols(), q = y.cols();
  if (n <= p + q) throw Error(Errc::TooFewRows, "mcd_regression needs n > p + q");
  Matrix z(n, p + q);
  z << x, y;

  MvRegResult res;
  Vector mu;
  Matrix sigma;
  try {
    res.joint = fast_mcd(z, cfg);
    mu = res.joint.reweighted.center;
    sigma = res.joint.reweighted.scatter;
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateData) throw;
    // All rows share one hyperplane. If x alone is fine, every row fits exactly.
    if (detail::SymEigen(detail::mean_cov(x).cov).singular()) {
      throw Error(Errc::SingularXScatter, "x data are degenerate");
    }
    res.joint_degenerate = true;
    const auto cl = classical_estimate(z);
    mu = cl.center;
    sigma = cl.scatter;
    res.joint.h = n;
    res.joint.exact_fit = true;
    res.joint.weights = WeightVector(n, true);
    res.joint.raw = res.joint.reweighted = LocationScatter{mu, sigma, 0.0, n, EstimateKind::Reweighted, 1.0};
  }

  res.raw = plugin_regression(mu, sigma, p);
  res.raw.weights = res.joint.weights;
  res.raw.kind = EstimateKind::Raw;
  detail::finish_residuals(x, y, res.raw);
  res.reweighted = reweight_mvreg(x, y, res.raw, cfg.cutoff_prob);
  return res;
}

/// Residual distances against robust distances of x; cutoffs sqrt(chi2_{p})
/// and sqrt(chi2_{q}) at `cutoff_prob`.
inline OutlierMapTable mvreg_outlier_map(const Matrix& x, const Matrix& y, const MvRegFit& fit,
                                         const McdResult& mcd_x, double cutoff_prob = 0.975) {
  if (x.rows() != y.rows() || fit.residual_distances.size() != y.rows() ||
      mcd_x.robust_distances.size() != x.rows()) {
    throw Error(Errc::LengthMismatch, "inconsistent row counts");
  }
  return make_outlier_map(MapKind::MvRegression, mcd_x.robust_distances, fit.residual_distances,
                          chi2_cutoff(x.cols(), cutoff_prob), chi2_cutoff(y.cols(), cutoff_prob),
                          cutoff_prob);
}

}  // namespace robstat
