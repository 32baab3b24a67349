#pragma once

// Minimum covariance determinant: C-steps, the FAST-MCD resampling search,
// one-step reweighting and (robust) Mahalanobis distances.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/detail/random.hpp"
#include "robstat/unirobust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace robstat {

struct McdConfig {
  Index h = 0;  ///< subset size; 0 selects default_h(n, p, alpha)
  double alpha = 0.75;
  Index nstarts = 500;
  Index n_refine = 10;
  double cutoff_prob = 0.975;
  std::uint64_t seed = 0;
  Index max_csteps = 1000;  ///< safety cap on the refinement loop
};

struct McdResult {
  LocationScatter raw;
  LocationScatter reweighted;
  HSubset best_subset;
  WeightVector weights;
  Vector robust_distances;
  double raw_objective = 0.0;  ///< det of the unscaled covariance of best_subset
  bool exact_fit = false;      ///< best_subset lies on a hyperplane (det = 0)
  Index h = 0;
};

/// Finite-sample multiplier applied on top of the asymptotic consistency
/// factors. Kept at 1; this is the hook for small-sample corrections.
inline double finite_sample_correction(Index /*h*/, Index /*n*/, Index /*p*/) { return 1.0; }

/// alpha / P(chi2_{p+2} <= chi2_{p,alpha}) with alpha = h/n; 1 when h = n.
inline double consistency_factor(Index h, Index n, Index p) {
  if (h < p + 1 || h > n) {
    throw Error(Errc::InvalidArgument, "consistency_factor needs p+1 <= h <= n");
  }
  if (h == n) return 1.0;
  return trimmed_variance_factor(static_cast<double>(h) / static_cast<double>(n), p);
}

inline Vector mahalanobis_distances(const Matrix& x, const Vector& center, const Matrix& scatter) {
  const detail::SymEigen eig(scatter);
  if (eig.singular()) throw Error(Errc::SingularScatter, "scatter matrix is singular");
  return eig.squared_distances(x, center).cwiseSqrt();
}

inline Vector mahalanobis_distances(const Dataset& data, const LocationScatter& est) {
  return mahalanobis_distances(data.values(), est.center, est.scatter);
}

/// Sample mean and covariance (divisor n - 1).
inline LocationScatter classical_estimate(const Matrix& x) {
  const auto mc = detail::mean_cov(x);
  const double n = static_cast<double>(x.rows());
  LocationScatter est;
  est.center = mc.mean;
  est.scatter = mc.cov * (n / std::max(1.0, n - 1.0));
  est.det = detail::SymEigen(est.scatter).det();
  est.h = x.rows();
  return est;
}

inline LocationScatter classical_estimate(const Dataset& data) { return classical_estimate(data.values()); }

namespace detail {

struct Candidate {
  std::vector<Index> rows;
  Vector mean;
  Matrix cov;
  double log_det = 0.0;
  bool singular = false;
};

inline Candidate make_candidate(const Matrix& x, std::vector<Index> rows) {
  auto mc = mean_cov(x, rows);
  const SymEigen eig(mc.cov);
  return {std::move(rows), std::move(mc.mean), std::move(mc.cov), eig.log_det(), eig.singular()};
}

/// One concentration step from a nonsingular candidate.
inline Candidate concentrate(const Matrix& x, const Candidate& c, Index h) {
  const SymEigen eig(c.cov);
  return make_candidate(x, h_smallest(eig.squared_distances(x, c.mean), h));
}

/// Sample covariance (divisor m - 1) of the candidate rows times `factor`.
inline LocationScatter to_estimate(const Candidate& c, double factor, EstimateKind kind) {
  const auto m = static_cast<double>(c.rows.size());
  LocationScatter est;
  est.center = c.mean;
  est.scatter = (factor * m / std::max(1.0, m - 1.0)) * c.cov;
  est.det = SymEigen(est.scatter).det();
  est.h = static_cast<Index>(c.rows.size());
  est.kind = kind;
  est.consistency = factor;
  return est;
}

inline void require_nondegenerate(const Matrix& x) {
  if (SymEigen(mean_cov(x).cov).singular()) {
    throw Error(Errc::DegenerateData, "the covariance matrix of the full dataset is singular");
  }
}

/// Rows whitened by the full-sample moments. Subset searches run here so that
/// singularity is judged against the spread of the data itself.
inline Matrix standardized(const Matrix& x) {
  require_nondegenerate(x);
  const auto mc = mean_cov(x);
  const SymEigen eig(mc.cov);
  const Matrix w = eig.vectors() * eig.values().cwiseSqrt().cwiseInverse().asDiagonal();
  return (x.rowwise() - mc.mean.transpose()) * w;
}

inline Index resolve_h(const McdConfig& cfg, Index n, Index p) {
  const Index h = cfg.h > 0 ? cfg.h : default_h(n, p, cfg.alpha);
  if (h < p + 1 || h > n) {
    throw Error(Errc::InvalidArgument, "h must satisfy p+1 <= h <= n (h=" + std::to_string(h) +
                                           ", n=" + std::to_string(n) +
                                           ", p=" + std::to_string(p) + ")");
  }
  return h;
}

}  // namespace detail

struct CStepResult {
  HSubset subset;
  LocationScatter estimate;  ///< mean and sample covariance of `subset`
};

/// Keeps the h rows nearest to `est` and re-estimates on them.
inline CStepResult c_step(const Dataset& data, const LocationScatter& est, Index h) {
  if (h < 1 || h > data.n()) throw Error(Errc::InvalidArgument, "c_step needs 1 <= h <= n");
  const detail::SymEigen eig(est.scatter);
  if (eig.singular()) throw Error(Errc::SingularScatter, "c_step from a singular scatter");
  auto rows = detail::h_smallest(eig.squared_distances(data.values(), est.center), h);
  const auto cand = detail::make_candidate(data.values(), rows);
  return {HSubset(std::move(rows)), detail::to_estimate(cand, 1.0, EstimateKind::Raw)};
}

/// Mean and sample covariance of an h-subset.
inline LocationScatter subset_estimate(const Dataset& data, const HSubset& subset) {
  return detail::to_estimate(detail::make_candidate(data.values(), subset.indices()), 1.0,
                             EstimateKind::Raw);
}

struct InitialSubset {
  std::vector<Index> start;  ///< the drawn (p+1)-subset, extended if it was singular
  HSubset subset;            ///< the h rows nearest to the start's mean/covariance
};

namespace detail {

inline InitialSubset draw_initial(const Matrix& x, Index h, std::uint64_t seed, Index stream) {
  const Index n = x.rows(), p = x.cols();
  Rng rng(stream_seed(seed, static_cast<std::uint64_t>(stream)));
  std::vector<Index> start = rng.distinct<Index>(n, p + 1);
  for (;;) {
    const auto mc = mean_cov(x, start);
    const SymEigen eig(mc.cov);
    if (!eig.singular()) {
      return {start, HSubset(h_smallest(eig.squared_distances(x, mc.mean), h))};
    }
    if (static_cast<Index>(start.size()) == n) {
      throw Error(Errc::DegenerateData, "the covariance matrix of the full dataset is singular");
    }
    for (;;) {
      const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      if (std::find(start.begin(), start.end(), c) == start.end()) {
        start.push_back(c);
        break;
      }
    }
  }
}

}  // namespace detail

/// Seeded starting subsets: a random (p+1)-subset, grown while its covariance is
/// singular, then the h rows closest to it. Start s depends only on (seed, s).
inline std::vector<InitialSubset> initial_subsets(const Dataset& data, Index h, Index nstarts,
                                                  std::uint64_t seed) {
  if (data.n() < data.p() + 1) throw Error(Errc::TooFewRows, "need n >= p + 1");
  if (h < data.p() + 1 || h > data.n()) throw Error(Errc::InvalidArgument, "need p+1 <= h <= n");
  const Matrix z = detail::standardized(data.values());
  std::vector<InitialSubset> out;
  out.reserve(static_cast<std::size_t>(nstarts));
  for (Index s = 0; s < nstarts; ++s) out.push_back(detail::draw_initial(z, h, seed, s));
  return out;
}

/// One-step reweighted estimate: rows within sqrt(chi2_{p,cutoff_prob}) of the
/// raw estimate get weight 1; mean/covariance of those rows, the covariance
/// scaled by the cutoff's consistency factor.
inline std::pair<LocationScatter, WeightVector> reweight_mcd(const Matrix& x,
                                                            const LocationScatter& raw,
                                                            double cutoff_prob) {
  const Index n = x.rows(), p = x.cols();
  const Vector d = mahalanobis_distances(x, raw.center, raw.scatter);
  const double cut = chi2_cutoff(p, cutoff_prob);
  WeightVector w(n, false);
  for (Index i = 0; i < n; ++i) w.set(i, d(i) <= cut);
  if (w.count() <= p) {
    throw Error(Errc::TooFewInliers, "only " + std::to_string(w.count()) +
                                         " rows pass the reweighting cutoff");
  }
  const double factor =
      trimmed_variance_factor(cutoff_prob, p) * finite_sample_correction(w.count(), n, p);
  auto est = detail::to_estimate(detail::make_candidate(x, w.selected()), factor,
                                 EstimateKind::Reweighted);
  return {std::move(est), std::move(w)};
}

inline std::pair<LocationScatter, WeightVector> reweight_mcd(const Dataset& data,
                                                            const LocationScatter& raw,
                                                            double cutoff_prob) {
  return reweight_mcd(data.values(), raw, cutoff_prob);
}

inline McdResult fast_mcd(const Matrix& x, const McdConfig& cfg = {}) {
  const Index n = x.rows(), p = x.cols();
  if (n <= p) throw Error(Errc::TooFewRows, "fast_mcd needs n > p");
  if (cfg.nstarts < 1 || cfg.n_refine < 1) {
    throw Error(Errc::InvalidArgument, "nstarts and n_refine must be positive");
  }
  const Index h = detail::resolve_h(cfg, n, p);
  const Matrix z = detail::standardized(x);

  detail::Candidate best;
  if (h == n) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    best = detail::make_candidate(z, std::move(all));
  } else {
    struct Scored {
      detail::Candidate cand;
      Index start;
    };
    std::vector<Scored> pool;
    pool.reserve(static_cast<std::size_t>(cfg.nstarts));
    for (Index s = 0; s < cfg.nstarts; ++s) {
      auto init = detail::draw_initial(z, h, cfg.seed, s);
      auto cand = detail::make_candidate(z, init.subset.indices());
      for (int step = 0; step < 2 && !cand.singular; ++step) cand = detail::concentrate(z, cand, h);
      pool.push_back({std::move(cand), s});
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) {
      return a.cand.log_det < b.cand.log_det;
    });

    // The n_refine best distinct subsets are iterated to convergence.
    std::vector<detail::Candidate> finalists;
    for (const auto& sc : pool) {
      if (static_cast<Index>(finalists.size()) == cfg.n_refine) break;
      const bool dup = std::any_of(finalists.begin(), finalists.end(),
                                   [&](const detail::Candidate& f) { return f.rows == sc.cand.rows; });
      if (!dup) finalists.push_back(sc.cand);
    }
    bool have_best = false;
    for (auto& cand : finalists) {
      for (Index it = 0; it < cfg.max_csteps && !cand.singular; ++it) {
        auto next = detail::concentrate(z, cand, h);
        if (next.rows == cand.rows) break;
        if (!(next.log_det < cand.log_det)) break;
        cand = std::move(next);
      }
      if (!have_best || cand.log_det < best.log_det) {
        best = cand;
        have_best = true;
      }
    }
  }

  const bool singular = best.singular;
  best = detail::make_candidate(x, std::move(best.rows));
  best.singular = singular;

  McdResult res;
  res.h = h;
  res.best_subset = HSubset(best.rows);
  res.raw_objective = detail::to_estimate(best, 1.0, EstimateKind::Raw).det;
  const double c_raw = consistency_factor(h, n, p) * finite_sample_correction(h, n, p);
  res.raw = detail::to_estimate(best, c_raw, EstimateKind::Raw);

  if (best.singular) {
    // Exact fit: the optimal h-subset spans a hyperplane. Rows on it get weight 1.
    res.exact_fit = true;
    const double tol = 1e-9 * detail::data_scale(x);
    const Vector on = detail::subspace_distances(x, best.mean, best.cov, tol);
    res.weights = WeightVector(n, false);
    for (Index i = 0; i < n; ++i) res.weights.set(i, std::isfinite(on(i)));
    res.reweighted = detail::to_estimate(detail::make_candidate(x, res.weights.selected()), 1.0,
                                         EstimateKind::Reweighted);
    res.robust_distances =
        detail::subspace_distances(x, res.reweighted.center, res.reweighted.scatter, tol);
    return res;
  }

  auto [rw, w] = reweight_mcd(x, res.raw, cfg.cutoff_prob);
  res.reweighted = std::move(rw);
  res.weights = std::move(w);
  const detail::SymEigen eig(res.reweighted.scatter);
  if (eig.singular()) {
    res.exact_fit = true;
    res.robust_distances = detail::subspace_distances(x, res.reweighted.center,
                                                      res.reweighted.scatter,
                                                      1e-9 * detail::data_scale(x));
  } else {
    res.robust_distances = eig.squared_distances(x, res.reweighted.center).cwiseSqrt();
  }
  return res;
}

inline McdResult fast_mcd(const Dataset& data, const McdConfig& cfg = {}) {
  return fast_mcd(data.values(), cfg);
}

/// Distances of every row at the reweighted estimate.
inline Vector robust_distances(const Dataset& data, const McdResult& result) {
  return mahalanobis_distances(data, result.reweighted);
}

}  // namespace robstat
