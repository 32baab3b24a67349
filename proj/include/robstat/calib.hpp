#pragma once

// Multivariate calibration: SIMPLS, its robust version RSIMPLS, robust
// principal component regression and leave-one-out RMSECV.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/mcd.hpp"
#include "robstat/mvreg.hpp"
#include "robstat/outlier_map.hpp"
#include "robstat/robpca.hpp"
#include "robstat/unirobust.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace robstat {

struct CalibConfig {
  double alpha = 0.75;
  Index nstarts = 500;
  std::uint64_t seed = 0;
  double cutoff_prob = 0.975;
  Index ndirs = 250;
  /// Components of the joint ROBPCA in rsimpls; 0 uses k + q.
  Index pca_components = 0;

  RobpcaConfig robpca() const {
    RobpcaConfig c;
    c.alpha = alpha;
    c.nstarts = nstarts;
    c.seed = seed;
    c.cutoff_prob = cutoff_prob;
    c.ndirs = ndirs;
    return c;
  }
  McdConfig mcd() const {
    McdConfig c;
    c.alpha = alpha;
    c.nstarts = nstarts;
    c.seed = seed;
    c.cutoff_prob = cutoff_prob;
    return c;
  }
};

struct PlsModel {
  Vector x_center;
  Vector y_center;
  Matrix weights_r;    ///< p x k, unit columns r_a
  Matrix y_weights_q;  ///< q x k, unit columns q_a
  Matrix x_loadings;   ///< p x k, columns p_a
  Matrix coefficients; ///< p x q
  Vector intercept;    ///< q
  Index k = 0;
  bool robust = false;
  double cutoff_prob = 0.975;
  Matrix score_scatter;  ///< k x k scatter of the scores
  WeightVector row_weights;
  Vector residual_distances;

  Matrix predict(const Matrix& x) const { return (x * coefficients).rowwise() + intercept.transpose(); }
  Matrix scores(const Matrix& x) const { return (x.rowwise() - x_center.transpose()) * weights_r; }
};

struct PcrModel {
  PcaModel pca;
  MvRegResult regression;  ///< MCD regression of y on the scores
  Matrix coefficients;     ///< p x q
  Vector intercept;
  Index k = 0;

  Matrix predict(const Matrix& x) const { return (x * coefficients).rowwise() + intercept.transpose(); }
};

struct CvCurve {
  std::vector<Index> k_values;
  std::vector<double> rmsecv;
  Index selected_k = 0;
};

struct SimplsBasis {
  Matrix r;  ///< p x k
  Matrix q;  ///< q x k
  Matrix p;  ///< p x k
  Matrix v;  ///< p x k, orthonormal basis of the x-loadings
};

/// SIMPLS weights from second moments: (r_a, q_a) is the leading singular
/// pair of the deflated cross-covariance, signed so the largest |q_a| entry
/// is positive.
inline SimplsBasis simpls_basis(const Matrix& sx, const Matrix& sxy, Index k) {
  const Index p = sx.rows(), q = sxy.cols();
  if (k < 1 || k > p) throw Error(Errc::RankTooLow, "k must be in 1..p");
  const double s0 = sxy.norm();
  if (!(s0 > 0.0)) throw Error(Errc::RankTooLow, "x and y are uncorrelated");
  SimplsBasis b{Matrix(p, k), Matrix(q, k), Matrix(p, k), Matrix(p, k)};
  Matrix s = sxy;
  for (Index a = 0; a < k; ++a) {
    const Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!(svd.singularValues()(0) > 1e-12 * s0)) {
      throw Error(Errc::RankTooLow, "cross-covariance is exhausted after " + std::to_string(a) + " components");
    }
    Vector r = svd.matrixU().col(0);
    Vector qa = svd.matrixV().col(0);
    Index big = 0;
    for (Index j = 1; j < q; ++j)
      if (std::abs(qa(j)) > std::abs(qa(big))) big = j;
    if (qa(big) < 0.0) {
      r = -r;
      qa = -qa;
    }
    const double rsr = r.dot(sx * r);
    if (!(rsr > 0.0)) throw Error(Errc::RankTooLow, "x scatter vanishes along a weight vector");
    const Vector pa = sx * r / rsr;
    Vector va = pa;
    for (int pass = 0; pass < 2; ++pass) va -= b.v.leftCols(a) * (b.v.leftCols(a).transpose() * va);
    const double nv = va.norm();
    if (!(nv > 1e-12 * pa.norm())) throw Error(Errc::RankTooLow, "x-loadings are linearly dependent");
    va /= nv;
    s -= va * (va.transpose() * s);
    b.r.col(a) = r;
    b.q.col(a) = qa;
    b.p.col(a) = pa;
    b.v.col(a) = va;
  }
  return b;
}

inline PlsModel simpls(const Matrix& x, const Matrix& y, Index k) {
  if (x.rows() != y.rows()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  const Index n = x.rows();
  if (n <= k + 1) throw Error(Errc::TooFewRows, "simpls needs n > k + 1");
  PlsModel m;
  m.x_center = x.colwise().mean().transpose();
  m.y_center = y.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - m.x_center.transpose();
  const Matrix yc = y.rowwise() - m.y_center.transpose();
  const double dn = static_cast<double>(n - 1);
  const auto b = simpls_basis(xc.transpose() * xc / dn, xc.transpose() * yc / dn, k);
  const Matrix t = xc * b.r;
  const Matrix ttt = t.transpose() * t;
  if (detail::SymEigen(ttt).singular()) throw Error(Errc::RankTooLow, "scores are collinear");
  const Matrix bt = ttt.ldlt().solve(t.transpose() * yc);

  m.k = k;
  m.weights_r = b.r;
  m.y_weights_q = b.q;
  m.x_loadings = b.p;
  m.coefficients = b.r * bt;
  m.intercept = m.y_center - m.coefficients.transpose() * m.x_center;
  m.score_scatter = ttt / dn;
  m.row_weights = WeightVector(n, true);
  const Matrix res = y - m.predict(x);
  const Matrix se = res.transpose() * res / static_cast<double>(n - k - 1);
  const detail::SymEigen eig(se);
  m.residual_distances = eig.singular() ? Vector(Vector::Zero(n)) : Vector(eig.squared_distances(res, Vector::Zero(y.cols())).cwiseSqrt());
  return m;
}

/// RSIMPLS given a ROBPCA model of the joined data [x y]: SIMPLS weights from
/// the robust scatter, then MCD regression of y on the robust scores.
inline PlsModel rsimpls_from_pca(const Matrix& x, const Matrix& y, const PcaModel& joint, Index k,
                                 const McdConfig& mcd = {}) {
  const Index p = x.cols(), q = y.cols();
  if (joint.center.size() != p + q) throw Error(Errc::LengthMismatch, "joint model has the wrong dimension");
  const Matrix sz = joint.scatter();
  const Matrix sx = sz.topLeftCorner(p, p);
  const Matrix sxy = sz.topRightCorner(p, q);
  const auto b = simpls_basis(sx, sxy, k);

  PlsModel m;
  m.robust = true;
  m.cutoff_prob = mcd.cutoff_prob;
  m.k = k;
  m.x_center = joint.center.head(p);
  m.y_center = joint.center.tail(q);
  m.weights_r = b.r;
  m.y_weights_q = b.q;
  m.x_loadings = b.p;
  m.score_scatter = detail::symmetrize(b.r.transpose() * sx * b.r);

  const auto reg = mcd_regression(m.scores(x), y, mcd);
  const MvRegFit& fit = reg.reweighted;
  m.coefficients = b.r * fit.B;
  m.intercept = fit.alpha - fit.B.transpose() * b.r.transpose() * m.x_center;
  m.row_weights = fit.weights;
  m.residual_distances = fit.residual_distances;
  return m;
}

namespace detail {

inline Index joint_components(const CalibConfig& cfg, Index k, Index n, Index p, Index q) {
  const Index k0 = cfg.pca_components > 0 ? cfg.pca_components : k + q;
  return std::min({k0, p + q, n - 1});
}

inline Matrix join(const Matrix& x, const Matrix& y) {
  Matrix z(x.rows(), x.cols() + y.cols());
  z << x, y;
  return z;
}

}  // namespace detail

inline PlsModel rsimpls(const Matrix& x, const Matrix& y, Index k, const CalibConfig& cfg = {}) {
  if (x.rows() != y.rows()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  const Index n = x.rows();
  if (n <= k + 1) throw Error(Errc::TooFewRows, "rsimpls needs n > k + 1");
  const Index k0 = detail::joint_components(cfg, k, n, x.cols(), y.cols());
  const PcaModel joint = robpca(detail::join(x, y), k0, cfg.robpca());
  return rsimpls_from_pca(x, y, joint, k, cfg.mcd());
}

/// ROBPCA on x, MCD regression of y on the robust scores, composed back to
/// x-space coefficients.
inline PcrModel rpcr(const Matrix& x, const Matrix& y, Index k, const CalibConfig& cfg = {}) {
  if (x.rows() != y.rows()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  PcrModel m;
  m.k = k;
  m.pca = robpca(x, k, cfg.robpca());
  m.regression = mcd_regression(scores(m.pca, x), y, cfg.mcd());
  const MvRegFit& f = m.regression.reweighted;
  m.coefficients = m.pca.loadings * f.B;
  m.intercept = f.alpha - f.B.transpose() * m.pca.loadings.transpose() * m.pca.center;
  return m;
}

/// Score distance against residual distance, cutoffs sqrt(chi2_k) and sqrt(chi2_q).
inline OutlierMapTable pls_outlier_map(const PlsModel& m, const Matrix& x, const Matrix& y) {
  const detail::SymEigen eig(m.score_scatter);
  if (eig.singular()) throw Error(Errc::SingularScatter, "score scatter is singular");
  const Vector sd = eig.squared_distances(m.scores(x), Vector::Zero(m.k)).cwiseSqrt();
  const Vector& rd = m.residual_distances;
  if (rd.size() != x.rows() || y.rows() != x.rows()) {
    throw Error(Errc::LengthMismatch, "model was fitted on other rows");
  }
  return make_outlier_map(MapKind::MvRegression, sd, rd, chi2_cutoff(m.k, m.cutoff_prob),
                          chi2_cutoff(y.cols(), m.cutoff_prob), m.cutoff_prob);
}

enum class CalibMethod { Simpls, Rsimpls, Rpcr };

inline const char* to_string(CalibMethod m) {
  switch (m) {
    case CalibMethod::Simpls: return "simpls";
    case CalibMethod::Rsimpls: return "rsimpls";
    case CalibMethod::Rpcr: return "rpcr";
  }
  return "simpls";
}

/// Leave-one-out RMSECV for k = 1..k_max. Robust mode averages only over rows
/// with weight 1 in the full-data fit with the same k (all rows for simpls).
/// Every fold is a full refit, so the cost is n * k_max fits.
inline CvCurve rmsecv(const Matrix& x, const Matrix& y, Index k_max, CalibMethod method, bool robust,
                      const CalibConfig& cfg = {}) {
  if (x.rows() != y.rows()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  const Index n = x.rows(), p = x.cols(), q = y.cols();
  if (k_max < 1) throw Error(Errc::InvalidArgument, "k_max must be >= 1");
  if (k_max >= n - 1) throw Error(Errc::TooFewRows, "k_max must be < n - 1");

  // Rsimpls folds share one joint ROBPCA sized for k_max.
  CalibConfig rcfg = cfg;
  if (method == CalibMethod::Rsimpls && rcfg.pca_components == 0) rcfg.pca_components = k_max + q;
  const Index k0 = detail::joint_components(rcfg, k_max, n - 1, p, q);

  auto fit_predict = [&](const Matrix& xt, const Matrix& yt, const PcaModel* joint, Index k,
                         const Matrix& xn, WeightVector* w) -> Matrix {
    switch (method) {
      case CalibMethod::Simpls: {
        const auto m = simpls(xt, yt, k);
        if (w) *w = m.row_weights;
        return m.predict(xn);
      }
      case CalibMethod::Rsimpls: {
        const auto m = rsimpls_from_pca(xt, yt, *joint, k, cfg.mcd());
        if (w) *w = m.row_weights;
        return m.predict(xn);
      }
      case CalibMethod::Rpcr: {
        const auto m = rpcr(xt, yt, k, cfg);
        if (w) *w = m.regression.reweighted.weights;
        return m.predict(xn);
      }
    }
    return {};
  };

  std::vector<WeightVector> full_w(static_cast<std::size_t>(k_max));
  if (robust) {
    PcaModel joint;
    if (method == CalibMethod::Rsimpls) joint = robpca(detail::join(x, y), k0, rcfg.robpca());
    for (Index k = 1; k <= k_max; ++k) fit_predict(x, y, &joint, k, x.topRows(1), &full_w[static_cast<std::size_t>(k - 1)]);
  }

  Matrix sq = Matrix::Zero(n, k_max);
  std::vector<Index> rows(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0, c = 0; j < n; ++j)
      if (j != i) rows[static_cast<std::size_t>(c++)] = j;
    const Matrix xt = select_rows(x, rows), yt = select_rows(y, rows);
    PcaModel joint;
    if (method == CalibMethod::Rsimpls) joint = robpca(detail::join(xt, yt), k0, rcfg.robpca());
    for (Index k = 1; k <= k_max; ++k) {
      const Matrix pred = fit_predict(xt, yt, &joint, k, x.row(i), nullptr);
      sq(i, k - 1) = (y.row(i) - pred.row(0)).squaredNorm();
    }
  }

  CvCurve c;
  double best = std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= k_max; ++k) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < n; ++i) {
      if (robust && !full_w[static_cast<std::size_t>(k - 1)][i]) continue;
      sum += sq(i, k - 1);
      ++count;
    }
    const double v = count > 0 ? std::sqrt(sum / static_cast<double>(count)) : std::numeric_limits<double>::infinity();
    c.k_values.push_back(k);
    c.rmsecv.push_back(v);
    if (v < best) {
      best = v;
      c.selected_k = k;
    }
  }
  return c;
}

}  // namespace robstat
