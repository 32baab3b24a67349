#pragma once

// Exhaustive reference solutions for MCD and LTS at desk scale, plus the
// contamination generator and breakdown probe used to exercise robustness.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/detail/random.hpp"
#include "robstat/lts.hpp"
#include "robstat/mcd.hpp"
#include "robstat/unirobust.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

namespace robstat {

/// Enumeration guard: larger searches fail instead of subsampling.
inline constexpr double kMaxEnumeration = 1e7;

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

namespace detail {

/// Calls f(rows) for every k-subset of [0, n) in lexicographic order.
template <typename F>
void for_each_combination(Index n, Index k, F&& f) {
  std::vector<Index> c(static_cast<std::size_t>(k));
  std::iota(c.begin(), c.end(), Index{0});
  for (;;) {
    f(static_cast<const std::vector<Index>&>(c));
    Index i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++c[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline void guard_enumeration(Index n, Index h) {
  if (binomial(n, h) > kMaxEnumeration) {
    throw Error(Errc::TooLarge, "C(" + std::to_string(n) + ", " + std::to_string(h) +
                                    ") subsets exceed the enumeration limit");
  }
}

}  // namespace detail

struct ExactMcd {
  HSubset subset;
  LocationScatter estimate;  ///< mean and sample covariance, no consistency factor
};

/// Global MCD optimum by enumeration. Ties: lexicographically smallest subset.
inline ExactMcd exact_mcd(const Dataset& data, Index h) {
  if (h < 1 || h > data.n()) throw Error(Errc::InvalidArgument, "exact_mcd needs 1 <= h <= n");
  detail::guard_enumeration(data.n(), h);
  const Matrix& x = data.values();
  std::vector<Index> best_rows;
  double best_det = std::numeric_limits<double>::infinity();
  detail::for_each_combination(data.n(), h, [&](const std::vector<Index>& rows) {
    const double det = detail::SymEigen(detail::mean_cov(x, rows).cov).det();
    if (det < best_det) {
      best_det = det;
      best_rows = rows;
    }
  });
  HSubset s(best_rows);
  return {s, subset_estimate(data, s)};
}

struct ExactLts {
  HSubset subset;
  Vector theta;
  double objective = 0.0;
};

/// Global LTS optimum: every h-subset's LS fit is scored by the trimmed sum of
/// squares over all n residuals.
inline ExactLts exact_lts(const Matrix& x, const Vector& y, Index h, bool intercept = true) {
  if (x.rows() != y.size()) throw Error(Errc::LengthMismatch, "x and y differ in row count");
  const Index n = x.rows();
  if (h < 1 || h > n) throw Error(Errc::InvalidArgument, "exact_lts needs 1 <= h <= n");
  detail::guard_enumeration(n, h);
  const Matrix u = detail::design_matrix(x, intercept);
  ExactLts best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<Index> best_rows;
  detail::for_each_combination(n, h, [&](const std::vector<Index>& rows) {
    Matrix beta;
    if (!detail::least_squares(u, y, rows, beta)) {
      throw Error(Errc::RankDeficient, "an h-subset has a rank-deficient design");
    }
    const double obj = trimmed_sum_of_squares(y - u * beta.col(0), h);
    if (obj < best.objective) {
      best.objective = obj;
      best.theta = beta.col(0);
      best_rows = rows;
    }
  });
  best.subset = HSubset(best_rows);
  return best;
}

inline ExactLts exact_lts(const Dataset& x, const Vector& y, Index h, bool intercept = true) {
  return exact_lts(x.values(), y, h, intercept);
}

enum class Placement { PointMass, Cluster };

struct ContaminationSpec {
  Index m = 0;
  double magnitude = 1e6;
  Placement placement = Placement::PointMass;
  /// Displacement direction (normalized internally); defaults to (1, ..., 1).
  std::optional<Vector> direction;
};

/// Replaces m seeded rows by points at `magnitude` from the coordinatewise
/// median along `direction`. Cluster placement adds Gaussian noise with the
/// columns' MAD as spread.
inline Dataset contaminate(const Dataset& data, const ContaminationSpec& spec, std::uint64_t seed) {
  const Index n = data.n(), p = data.p();
  if (spec.m < 0 || spec.m >= n) throw Error(Errc::InvalidArgument, "contamination needs 0 <= m < n");
  Matrix out = data.values();
  if (spec.m == 0) return Dataset(std::move(out), data.names());

  Vector dir = spec.direction ? *spec.direction : Vector::Ones(p);
  if (dir.size() != p || !(dir.norm() > 0)) throw Error(Errc::InvalidArgument, "bad contamination direction");
  dir.normalize();
  Vector center(p), spread(p);
  for (Index j = 0; j < p; ++j) {
    const Vector col = data.values().col(j);
    center(j) = median(col);
    const double s = mad(col);
    spread(j) = s > 0 ? s : 1.0;
  }
  detail::Rng rng(seed);
  const auto rows = rng.distinct<Index>(n, spec.m);
  for (Index r : rows) {
    Vector pt = center + spec.magnitude * dir;
    if (spec.placement == Placement::Cluster) {
      for (Index j = 0; j < p; ++j) pt(j) += spread(j) * rng.normal();
    }
    out.row(r) = pt.transpose();
  }
  return Dataset(std::move(out), data.names());
}

enum class ProbeEstimator { Mcd, Lts, ClassicalMean, Ols };

struct ProbeOptions {
  std::vector<double> magnitudes{1e2, 1e3, 1e4, 1e5, 1e6};
  /// Escape ball: radius = radius_factor * |clean estimate| + radius_offset.
  double radius_factor = 100.0;
  double radius_offset = 100.0;
  std::uint64_t seed = 0;
  Index nstarts = 500;
};

namespace detail {

/// Location for Mcd/ClassicalMean; coefficients for Lts/Ols, where the last
/// column of `data` is the response.
inline Vector probe_estimate(ProbeEstimator est, const Matrix& data, Index h, const ProbeOptions& opt) {
  const Index p = data.cols();
  switch (est) {
    case ProbeEstimator::ClassicalMean:
      return data.colwise().mean().transpose();
    case ProbeEstimator::Mcd: {
      McdConfig cfg;
      cfg.h = h;
      cfg.nstarts = opt.nstarts;
      cfg.seed = opt.seed;
      return fast_mcd(data, cfg).raw.center;
    }
    case ProbeEstimator::Ols:
      return ols(data.leftCols(p - 1), data.col(p - 1));
    case ProbeEstimator::Lts: {
      LtsConfig cfg;
      cfg.h = h;
      cfg.nstarts = opt.nstarts;
      cfg.seed = opt.seed;
      return fast_lts(Matrix(data.leftCols(p - 1)), Vector(data.col(p - 1)), cfg).raw.theta;
    }
  }
  return {};
}

}  // namespace detail

/// Largest m for which every contamination in the sweep (magnitudes x
/// placements x directions along (1,...,1) and each axis) keeps the estimate
/// inside the escape ball around the clean estimate.
inline Index breakdown_probe(ProbeEstimator est, const Dataset& data, Index h,
                             const ProbeOptions& opt = {}) {
  const Index n = data.n(), p = data.p();
  const Vector clean = detail::probe_estimate(est, data.values(), h, opt);
  const double radius = opt.radius_factor * clean.norm() + opt.radius_offset;

  std::vector<Vector> dirs{Vector::Ones(p)};
  for (Index j = 0; j < p; ++j) dirs.push_back(Vector::Unit(p, j));

  for (Index m = 1; m < n; ++m) {
    for (double mag : opt.magnitudes) {
      for (auto place : {Placement::PointMass, Placement::Cluster}) {
        for (const auto& dir : dirs) {
          const auto bad = contaminate(data, {m, mag, place, dir},
                                       detail::stream_seed(opt.seed, static_cast<std::uint64_t>(m)));
          bool broken = false;
          try {
            broken = (detail::probe_estimate(est, bad.values(), h, opt) - clean).norm() > radius;
          } catch (const Error&) {
            broken = true;
          }
          if (broken) return m - 1;
        }
      }
    }
  }
  return n - 1;
}

}  // namespace robstat
