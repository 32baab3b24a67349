#pragma once

// Least trimmed squares regression: FAST-LTS, the LTS scale estimate,
// one-step reweighted least squares and the regression outlier map.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/detail/random.hpp"
#include "robstat/mcd.hpp"
#include "robstat/outlier_map.hpp"
#include "robstat/unirobust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace robstat {

struct LtsConfig {
  Index h = 0;  ///< 0 selects default_h(n, p + intercept, alpha)
  double alpha = 0.75;
  Index nstarts = 500;
  Index n_refine = 10;
  double cutoff_prob = 0.975;
  std::uint64_t seed = 0;
  bool intercept = true;
  Index max_csteps = 1000;
};

struct LtsFit {
  Vector theta;  ///< slopes, then the intercept when fitted
  double sigma = 0.0;
  HSubset best_subset;
  WeightVector weights;
  Vector residuals;
  Vector std_residuals;
  double objective = 0.0;  ///< sum of the h smallest squared residuals
  EstimateKind kind = EstimateKind::Raw;
  bool intercept = true;
  bool exact_fit = false;

  Vector slope() const { return intercept ? Vector(theta.head(theta.size() - 1)) : theta; }
  double intercept_value() const { return intercept ? theta(theta.size() - 1) : 0.0; }
};

struct LtsResult {
  LtsFit raw;
  LtsFit reweighted;
  Index h = 0;
};

/// Sum of the h smallest squared residuals.
inline double trimmed_sum_of_squares(const Vector& residuals, Index h) {
  std::vector<double> sq(static_cast<std::size_t>(residuals.size()));
  for (Index i = 0; i < residuals.size(); ++i) sq[static_cast<std::size_t>(i)] = residuals(i) * residuals(i);
  std::nth_element(sq.begin(), sq.begin() + (h - 1), sq.end());
  double s = 0.0;
  for (Index i = 0; i < h; ++i) s += sq[static_cast<std::size_t>(i)];
  return s;
}

/// Consistency-corrected root mean of the h smallest squared residuals.
inline double lts_scale(const Vector& residuals, Index h) {
  const Index n = residuals.size();
  if (h < 1 || h > n) throw Error(Errc::InvalidArgument, "lts_scale needs 1 <= h <= n");
  const double alpha = static_cast<double>(h) / static_cast<double>(n);
  const double c = std::sqrt(trimmed_variance_factor(alpha, 1)) * finite_sample_correction(h, n, 1);
  return c * std::sqrt(trimmed_sum_of_squares(residuals, h) / static_cast<double>(h));
}

namespace detail {

struct LtsCandidate {
  std::vector<Index> rows;
  Vector beta;
  double objective = 0.0;
};

inline bool fit_rows(const Matrix& u, const Vector& y, const std::vector<Index>& rows, Index h,
                     LtsCandidate& out) {
  Matrix beta;
  if (!least_squares(u, y, rows, beta)) return false;
  out.rows = rows;
  out.beta = beta.col(0);
  out.objective = trimmed_sum_of_squares(y - u * out.beta, h);
  return true;
}

/// Random (p+1)-subset hyperplane, grown until unique, then its h closest rows.
inline std::vector<Index> lts_initial(const Matrix& u, const Vector& y, Index h,
                                      std::uint64_t seed, Index stream) {
  const Index n = u.rows(), d = u.cols();
  Rng rng(stream_seed(seed, static_cast<std::uint64_t>(stream)));
  std::vector<Index> rows = rng.distinct<Index>(n, d);
  Matrix beta;
  while (!least_squares(u, y, rows, beta)) {
    if (static_cast<Index>(rows.size()) == n) {
      throw Error(Errc::RankDeficient, "the regression design has deficient rank");
    }
    for (;;) {
      const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      if (std::find(rows.begin(), rows.end(), c) == rows.end()) {
        rows.push_back(c);
        break;
      }
    }
  }
  return h_smallest((y - u * beta.col(0)).cwiseAbs(), h);
}

/// Returns false when the new subset's design is rank deficient.
inline bool lts_concentrate(const Matrix& u, const Vector& y, const LtsCandidate& c, Index h,
                            LtsCandidate& next) {
  return fit_rows(u, y, h_smallest((y - u * c.beta).cwiseAbs(), h), h, next);
}

inline LtsFit make_lts_fit(const Matrix& u, const Vector& y, const Vector& beta, bool intercept) {
  LtsFit f;
  f.theta = beta;
  f.intercept = intercept;
  f.residuals = y - u * beta;
  return f;
}

}  // namespace detail

/// One-step reweighted least squares on the rows with
/// |r_i / sigma| <= sqrt(chi2_{1,cutoff_prob}).
inline LtsFit reweight_lts(const Matrix& x, const Vector& y, const LtsFit& raw, double cutoff_prob) {
  if (!(raw.sigma > 0.0)) throw Error(Errc::InvalidArgument, "reweight_lts needs raw sigma > 0");
  const Matrix u = detail::design_matrix(x, raw.intercept);
  const Index n = u.rows();
  const Vector r0 = y - u * raw.theta;
  const double cut = chi2_cutoff(1, cutoff_prob);
  WeightVector w(n, false);
  for (Index i = 0; i < n; ++i) w.set(i, std::abs(r0(i) / raw.sigma) <= cut);
  if (w.count() < u.cols() + 1) {
    throw Error(Errc::TooFewInliers, "only " + std::to_string(w.count()) + " rows pass the cutoff");
  }
  Matrix beta;
  if (!detail::least_squares(u, y, w.selected(), beta)) {
    throw Error(Errc::RankDeficient, "weighted design has deficient rank");
  }
  LtsFit f = detail::make_lts_fit(u, y, beta.col(0), raw.intercept);
  double ss = 0.0;
  for (Index i = 0; i < n; ++i)
    if (w[i]) ss += f.residuals(i) * f.residuals(i);
  const double d = std::sqrt(trimmed_variance_factor(cutoff_prob, 1)) *
                   finite_sample_correction(w.count(), n, 1);
  f.sigma = d * std::sqrt(ss / static_cast<double>(w.count()));
  f.std_residuals = f.residuals / f.sigma;
  f.weights = std::move(w);
  f.best_subset = raw.best_subset;
  f.objective = raw.objective;
  f.kind = EstimateKind::Reweighted;
  return f;
}

inline LtsResult fast_lts(const Matrix& x, const Vector& y, const LtsConfig& cfg = {}) {
  if (x.rows() != y.size()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  const Matrix u = detail::design_matrix(x, cfg.intercept);
  const Index n = u.rows(), d = u.cols();
  if (n <= d) throw Error(Errc::TooFewRows, "fast_lts needs more rows than coefficients");
  const Index h = cfg.h > 0 ? cfg.h : default_h(n, d, cfg.alpha);
  if (h < d || h > n) throw Error(Errc::InvalidArgument, "h must satisfy p+1 <= h <= n");
  {
    Eigen::ColPivHouseholderQR<Matrix> qr(u);
    qr.setThreshold(1e-11);
    if (qr.rank() < d) throw Error(Errc::RankDeficient, "the regression design has deficient rank");
  }

  detail::LtsCandidate best;
  if (h == n) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    detail::fit_rows(u, y, all, h, best);
  } else {
    struct Scored {
      detail::LtsCandidate cand;
      Index start;
    };
    std::vector<Scored> pool;
    pool.reserve(static_cast<std::size_t>(cfg.nstarts));
    for (Index s = 0; s < cfg.nstarts; ++s) {
      detail::LtsCandidate cand;
      if (!detail::fit_rows(u, y, detail::lts_initial(u, y, h, cfg.seed, s), h, cand)) continue;
      for (int step = 0; step < 2; ++step) {
        detail::LtsCandidate next;
        if (!detail::lts_concentrate(u, y, cand, h, next)) break;
        cand = std::move(next);
      }
      pool.push_back({std::move(cand), s});
    }
    if (pool.empty()) throw Error(Errc::RankDeficient, "no start produced a full-rank h-subset");
    std::stable_sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) {
      return a.cand.objective < b.cand.objective;
    });
    std::vector<detail::LtsCandidate> finalists;
    for (const auto& sc : pool) {
      if (static_cast<Index>(finalists.size()) == cfg.n_refine) break;
      const bool dup = std::any_of(finalists.begin(), finalists.end(),
                                   [&](const detail::LtsCandidate& f) { return f.rows == sc.cand.rows; });
      if (!dup) finalists.push_back(sc.cand);
    }
    bool have_best = false;
    for (auto& cand : finalists) {
      for (Index it = 0; it < cfg.max_csteps && cand.objective > 0.0; ++it) {
        detail::LtsCandidate next;
        if (!detail::lts_concentrate(u, y, cand, h, next)) break;
        if (next.rows == cand.rows || !(next.objective < cand.objective)) break;
        cand = std::move(next);
      }
      if (!have_best || cand.objective < best.objective) {
        best = cand;
        have_best = true;
      }
    }
  }

  LtsResult res;
  res.h = h;
  LtsFit& raw = res.raw;
  raw = detail::make_lts_fit(u, y, best.beta, cfg.intercept);
  raw.best_subset = HSubset(best.rows);
  raw.objective = best.objective;
  raw.sigma = lts_scale(raw.residuals, h);
  raw.kind = EstimateKind::Raw;

  const double y_scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (raw.sigma <= 1e-12 * y_scale) {
    // Exact fit: at least h rows lie on the hyperplane.
    raw.exact_fit = true;
    raw.sigma = 0.0;
    const double tol = 1e-9 * y_scale;
    raw.weights = WeightVector(n, false);
    raw.std_residuals = Vector(n);
    for (Index i = 0; i < n; ++i) {
      const bool on = std::abs(raw.residuals(i)) <= tol;
      raw.weights.set(i, on);
      raw.std_residuals(i) = on ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), raw.residuals(i));
    }
    Matrix beta;
    res.reweighted = raw;
    if (detail::least_squares(u, y, raw.weights.selected(), beta)) {
      res.reweighted.theta = beta.col(0);
      res.reweighted.residuals = y - u * res.reweighted.theta;
    }
    res.reweighted.kind = EstimateKind::Reweighted;
    return res;
  }

  raw.std_residuals = raw.residuals / raw.sigma;
  const double cut = chi2_cutoff(1, cfg.cutoff_prob);
  raw.weights = WeightVector(n, false);
  for (Index i = 0; i < n; ++i) raw.weights.set(i, std::abs(raw.std_residuals(i)) <= cut);
  res.reweighted = reweight_lts(x, y, raw, cfg.cutoff_prob);
  return res;
}

inline LtsResult fast_lts(const Dataset& x, const Vector& y, const LtsConfig& cfg = {}) {
  return fast_lts(x.values(), y, cfg);
}

/// Ordinary least squares with an optional intercept column.
inline Vector ols(const Matrix& x, const Vector& y, bool intercept = true) {
  const Matrix u = detail::design_matrix(x, intercept);
  std::vector<Index> all(static_cast<std::size_t>(u.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  Matrix beta;
  if (!detail::least_squares(u, y, all, beta)) throw Error(Errc::RankDeficient, "design has deficient rank");
  return beta.col(0);
}

/// Standardized residuals against robust distances of x. Cutoffs:
/// sqrt(chi2_{p,prob}) on the distances and sqrt(chi2_{1,prob}) on |residual|.
inline OutlierMapTable regression_outlier_map(const Matrix& x, const Vector& y, const LtsFit& fit,
                                              const McdResult& mcd, double cutoff_prob = 0.975) {
  if (x.rows() != y.size() || fit.std_residuals.size() != y.size() ||
      mcd.robust_distances.size() != y.size()) {
    throw Error(Errc::LengthMismatch, "fit and MCD must be computed on the same rows");
  }
  return make_outlier_map(MapKind::Regression, mcd.robust_distances, fit.std_residuals,
                          chi2_cutoff(x.cols(), cutoff_prob), chi2_cutoff(1, cutoff_prob),
                          cutoff_prob);
}

}  // namespace robstat
