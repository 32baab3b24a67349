#pragma once

// ROBPCA: projection outlyingness picks an h-subset, its eigenvectors give a
// k-dimensional working space, and a reweighted MCD there fixes the final
// center, loadings and eigenvalues.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/detail/random.hpp"
#include "robstat/mcd.hpp"
#include "robstat/outlier_map.hpp"
#include "robstat/unirobust.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace robstat {

struct RobpcaConfig {
  double alpha = 0.75;
  Index h = 0;  ///< 0 selects default_h(n, k, alpha)
  Index ndirs = 250;
  Index nstarts = 500;
  std::uint64_t seed = 0;
  double cutoff_prob = 0.975;
  double variance_fraction = 0.8;  ///< picks k when the caller passes k = 0
  bool prescale = false;           ///< divide columns by their MAD first
};

struct PcaModel {
  Vector center;       ///< in prescaled coordinates when prescale is on
  Matrix loadings;     ///< p x k, orthonormal columns
  Vector eigenvalues;  ///< descending
  Index k = 0;
  double od_cutoff = 0.0;
  double sd_cutoff = 0.0;
  bool od_degenerate = false;  ///< MCD scale of OD^(2/3) was zero
  double cutoff_prob = 0.975;
  Vector scale;                ///< column divisors (ones without prescaling)
  Index h = 0;
  WeightVector weights;        ///< weights of the MCD in score space

  /// Rank-k scatter P L P'.
  Matrix scatter() const { return loadings * eigenvalues.asDiagonal() * loadings.transpose(); }

  Matrix standardize(const Matrix& x) const {
    if (x.cols() != center.size()) throw Error(Errc::LengthMismatch, "column count differs from the model");
    return x.array().rowwise() / scale.transpose().array();
  }
};

/// Maximal standardized deviation over directions through pairs of rows.
/// Uses every pair when there are at most ndirs of them. h is the univariate
/// MCD subset size (0: default_h(n, 1)).
inline Vector outlyingness(const Matrix& x, Index ndirs, std::uint64_t seed, Index h = 0) {
  const Index n = x.rows();
  if (n < 2) throw Error(Errc::TooFewRows, "outlyingness needs at least 2 rows");
  if (h == 0) h = default_h(n, 1);

  std::vector<std::pair<Index, Index>> pairs;
  if (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0 <= static_cast<double>(ndirs)) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  } else {
    detail::Rng rng(seed);
    const auto un = static_cast<std::uint64_t>(n);
    for (Index d = 0; d < ndirs; ++d) {
      const auto i = static_cast<Index>(rng.below(un));
      auto j = static_cast<Index>(rng.below(un - 1));
      if (j >= i) ++j;
      pairs.emplace_back(i, j);
    }
  }

  Vector out = Vector::Zero(n);
  bool used = false;
  for (const auto& [i, j] : pairs) {
    Vector dir = (x.row(i) - x.row(j)).transpose();
    const double norm = dir.norm();
    if (!(norm > 0.0)) continue;
    dir /= norm;
    const Vector proj = x * dir;
    const UniEstimate u = univariate_mcd(proj, h);
    if (!(u.scale > 1e-12 * std::max(1.0, proj.cwiseAbs().maxCoeff()))) continue;
    used = true;
    out = out.cwiseMax(((proj.array() - u.location).abs() / u.scale).matrix());
  }
  if (!used) throw Error(Errc::AllDirectionsDegenerate, "every projection direction has zero scale");
  return out;
}

inline Matrix scores(const PcaModel& m, const Matrix& x) {
  return (m.standardize(x).rowwise() - m.center.transpose()) * m.loadings;
}

/// Distance to the model subspace. Values below 1e-10 times the distance to
/// the center are rounding noise and reported as 0.
inline Vector orthogonal_distances(const PcaModel& m, const Matrix& x) {
  const Matrix d = m.standardize(x).rowwise() - m.center.transpose();
  const Matrix res = d - d * m.loadings * m.loadings.transpose();
  Vector od = res.rowwise().norm();
  for (Index i = 0; i < od.size(); ++i)
    if (od(i) <= 1e-10 * d.row(i).norm()) od(i) = 0.0;
  return od;
}

inline Vector score_distances(const PcaModel& m, const Matrix& x) {
  if (m.eigenvalues.size() == 0 || !(m.eigenvalues.minCoeff() > 0.0)) {
    throw Error(Errc::ZeroEigenvalue, "model has a zero eigenvalue");
  }
  const Matrix t = scores(m, x);
  return (t.array().square().rowwise() / m.eigenvalues.transpose().array()).rowwise().sum().sqrt();
}

struct OdCutoff {
  double cutoff = 0.0;
  bool degenerate = false;
};

/// Univariate MCD (h = floor(0.75 n)) of OD^(2/3) gives m and s; the cutoff is
/// (m + s z_prob)^(3/2). With s = 0 the cutoff is the largest OD in the MCD window.
inline OdCutoff od_cutoff(const Vector& ods, double prob = 0.975) {
  const Index n = ods.size();
  if (n < 2) throw Error(Errc::TooFewRows, "od_cutoff needs at least 2 distances");
  if ((ods.array() < 0.0).any()) throw Error(Errc::InvalidArgument, "orthogonal distances must be >= 0");
  std::vector<double> sorted(ods.data(), ods.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> v(sorted.size());
  std::transform(sorted.begin(), sorted.end(), v.begin(), [](double d) { return std::cbrt(d * d); });

  const Index h = std::max<Index>(2, static_cast<Index>(std::floor(0.75 * static_cast<double>(n))));
  const auto win = univariate_mcd_window(v, h);
  const double s = std::sqrt(trimmed_variance_factor(static_cast<double>(h) / static_cast<double>(n), 1)) * win.raw_sd;
  if (!(s > 1e-12 * std::abs(win.mean))) {
    return {sorted[static_cast<std::size_t>(win.start + h - 1)], true};
  }
  return {std::pow(win.mean + s * normal_quantile(prob), 1.5), false};
}

namespace detail {

/// Descending eigen pairs of a symmetric matrix.
inline std::pair<Vector, Matrix> descending_eigen(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

}  // namespace detail

/// k = 0 chooses the smallest k whose h-subset eigenvalues reach
/// cfg.variance_fraction of the total.
inline PcaModel robpca(const Matrix& data, Index k, const RobpcaConfig& cfg = {}) {
  const Index n = data.rows(), p = data.cols();
  if (n < 2) throw Error(Errc::TooFewRows, "robpca needs at least 2 rows");
  if (k < 0) throw Error(Errc::InvalidArgument, "k must be >= 0");
  if (!data.allFinite()) throw Error(Errc::NonFinite, "data contain non-finite values");

  PcaModel m;
  m.cutoff_prob = cfg.cutoff_prob;
  m.scale = Vector::Ones(p);
  if (cfg.prescale) {
    for (Index j = 0; j < p; ++j) {
      const double s = mad(Vector(data.col(j)));
      if (!(s > 0.0)) throw Error(Errc::DegenerateData, "column " + std::to_string(j + 1) + " has zero MAD");
      m.scale(j) = s;
    }
  }
  const Matrix x = data.array().rowwise() / m.scale.transpose().array();

  // Affine span of the data.
  const Vector m0 = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - m0.transpose();
  const Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) throw Error(Errc::DegenerateData, "all rows are identical");
  Index r = 0;
  while (r < sv.size() && sv(r) > 1e-10 * sv(0)) ++r;
  r = std::min(r, n - 1);
  if (k > r) {
    throw Error(Errc::RankTooLow, "k=" + std::to_string(k) + " exceeds the data rank " + std::to_string(r));
  }
  const Matrix v = svd.matrixV().leftCols(r);
  const Matrix z = xc * v;

  // h least outlying rows.
  const Index h = cfg.h > 0 ? cfg.h : default_h(n, k > 0 ? k : r, cfg.alpha);
  const Vector out = outlyingness(z, cfg.ndirs, cfg.seed, h);
  const auto keep = detail::h_smallest(out, h);
  const auto mh = detail::mean_cov(z, keep);
  const auto [lh, eh] = detail::descending_eigen(mh.cov);
  if (k == 0) {
    const double total = lh.cwiseMax(0.0).sum();
    double acc = 0.0;
    while (k < r && acc < cfg.variance_fraction * total) acc += std::max(0.0, lh(k++));
    k = std::max<Index>(k, 1);
  }
  if (!(lh(k - 1) > lh(0) / detail::kSingularCondition)) {
    throw Error(Errc::RankTooLow, "the h-subset spans fewer than " + std::to_string(k) + " dimensions");
  }
  const Matrix e = eh.leftCols(k);
  const Matrix t = (z.rowwise() - mh.mean.transpose()) * e;

  // Reweighted MCD in score space.
  McdConfig mc;
  mc.h = h;
  mc.alpha = cfg.alpha;
  mc.nstarts = cfg.nstarts;
  mc.seed = cfg.seed;
  mc.cutoff_prob = cfg.cutoff_prob;
  McdResult mr = fast_mcd(t, mc);
  if (mr.exact_fit) throw Error(Errc::DegenerateData, "scores of the h-subset lie on a hyperplane");
  const auto [lt, ut] = detail::descending_eigen(mr.reweighted.scatter);
  if (!(lt(k - 1) > 0.0)) throw Error(Errc::ZeroEigenvalue, "score scatter has a zero eigenvalue");

  m.k = k;
  m.h = h;
  m.eigenvalues = lt;
  m.loadings = v * e * ut;
  m.center = m0 + v * (mh.mean + e * mr.reweighted.center);
  m.weights = std::move(mr.weights);

  // Sign: the row with the largest |score| gets a positive score.
  const Matrix sc = (x.rowwise() - m.center.transpose()) * m.loadings;
  for (Index j = 0; j < k; ++j) {
    Index best = 0;
    for (Index i = 1; i < n; ++i)
      if (std::abs(sc(i, j)) > std::abs(sc(best, j))) best = i;
    if (sc(best, j) < 0.0) m.loadings.col(j) *= -1.0;
  }

  m.sd_cutoff = chi2_cutoff(k, cfg.cutoff_prob);
  const auto oc = od_cutoff(orthogonal_distances(m, data), cfg.cutoff_prob);
  m.od_cutoff = oc.cutoff;
  m.od_degenerate = oc.degenerate;
  return m;
}

inline PcaModel robpca(const Dataset& data, Index k, const RobpcaConfig& cfg = {}) {
  return robpca(data.values(), k, cfg);
}

/// Score distance against orthogonal distance.
inline OutlierMapTable pca_outlier_map(const PcaModel& m, const Matrix& x) {
  return make_outlier_map(MapKind::Pca, score_distances(m, x), orthogonal_distances(m, x), m.sd_cutoff,
                          m.od_cutoff, m.cutoff_prob);
}

}  // namespace robstat
