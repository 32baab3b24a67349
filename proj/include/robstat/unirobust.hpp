#pragma once

// Univariate robust estimators (median, MAD, univariate MCD) and the chi-square
// and normal distribution helpers behind every cutoff in the library.

#include "robstat/datamodel.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace robstat {

struct UniEstimate {
  double location = 0.0;
  double scale = 0.0;
};

// --- distributions --------------------------------------------------------

inline double chi2_cdf(double df, double x) {
  if (!(df > 0)) throw Error(Errc::InvalidArgument, "chi2_cdf needs df > 0");
  if (!(x > 0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

inline double chi2_quantile(double df, double prob) {
  if (!(df > 0)) throw Error(Errc::InvalidArgument, "chi2_quantile needs df > 0");
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(Errc::BadProb, "probability must lie in (0, 1), got " + std::to_string(prob));
  }
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
}

inline double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(Errc::BadProb, "probability must lie in (0, 1), got " + std::to_string(prob));
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

/// sqrt(chi2_quantile(df, prob)), the usual distance cutoff.
inline double chi2_cutoff(Index df, double prob) {
  return std::sqrt(chi2_quantile(static_cast<double>(df), prob));
}

// --- location / scale ------------------------------------------------------

inline double median(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::EmptyVector, "median of an empty vector");
  std::vector<double> w(v.begin(), v.end());
  const auto mid = w.size() / 2;
  std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(mid), w.end());
  const double upper = w[mid];
  if (w.size() % 2 == 1) return upper;
  const double lower = *std::max_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double median(const Vector& v) { return median(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))); }

/// 1 / Phi^{-1}(0.75) = 1.4826...
inline double mad_constant() { return 1.0 / normal_quantile(0.75); }

/// Median absolute deviation, scaled to be consistent for the normal sd.
inline double mad(std::span<const double> v) {
  const double med = median(v);
  std::vector<double> dev(v.size());
  std::transform(v.begin(), v.end(), dev.begin(), [med](double x) { return std::abs(x - med); });
  return mad_constant() * median(dev);
}

inline double mad(const Vector& v) { return mad(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))); }

/// Variance-level consistency factor of a trimmed estimate that keeps the
/// fraction `alpha` of a p-variate normal sample: alpha / P(chi2_{p+2} <= q_alpha).
inline double trimmed_variance_factor(double alpha, Index p) {
  if (alpha >= 1.0) return 1.0;
  const double q = chi2_quantile(static_cast<double>(p), alpha);
  return alpha / chi2_cdf(static_cast<double>(p + 2), q);
}

struct UniMcdWindow {
  Index start = 0;      // first order statistic of the optimal window
  double mean = 0.0;    // window mean
  double raw_sd = 0.0;  // window standard deviation, divisor h - 1
};

/// Contiguous window of the sorted sample with the smallest variance.
/// Ties go to the lowest start.
inline UniMcdWindow univariate_mcd_window(std::span<const double> v, Index h) {
  const auto n = static_cast<Index>(v.size());
  if (h < 2 || h > n) {
    throw Error(Errc::SubsetTooSmall, "univariate MCD needs 2 <= h <= n (h=" +
                                          std::to_string(h) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  // Shift by the median so the running sums stay well conditioned.
  const double shift = s[static_cast<std::size_t>(n / 2)];
  for (auto& x : s) x -= shift;

  double sum = 0.0, sumsq = 0.0;
  for (Index i = 0; i < h; ++i) {
    sum += s[static_cast<std::size_t>(i)];
    sumsq += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
  }
  const double hd = static_cast<double>(h);
  // h times the sum of squared deviations; no division keeps integer data exact.
  auto ssq = [&] { return std::max(0.0, hd * sumsq - sum * sum); };

  Index best = 0;
  double best_ssq = ssq();
  for (Index j = 1; j + h <= n; ++j) {
    const double out = s[static_cast<std::size_t>(j - 1)];
    const double in = s[static_cast<std::size_t>(j + h - 1)];
    sum += in - out;
    sumsq += in * in - out * out;
    const double cur = ssq();
    // Differences at rounding level count as ties and keep the lower start.
    if (cur < best_ssq * (1.0 - 1e-12)) {
      best_ssq = cur;
      best = j;
    }
  }
  // Recompute the winner directly; the running sums only rank the windows.
  double mean = 0.0;
  for (Index i = best; i < best + h; ++i) mean += s[static_cast<std::size_t>(i)];
  mean /= hd;
  double ss = 0.0;
  for (Index i = best; i < best + h; ++i) {
    const double d = s[static_cast<std::size_t>(i)] - mean;
    ss += d * d;
  }
  return {best, mean + shift, std::sqrt(ss / (hd - 1.0))};
}

/// Univariate MCD: location = optimal window mean; scale = window sd times the
/// square root of the p = 1 trimming factor (exactly 1 when h = n).
inline UniEstimate univariate_mcd(std::span<const double> v, Index h) {
  const auto win = univariate_mcd_window(v, h);
  const double alpha = static_cast<double>(h) / static_cast<double>(v.size());
  return {win.mean, std::sqrt(trimmed_variance_factor(alpha, 1)) * win.raw_sd};
}

inline UniEstimate univariate_mcd(const Vector& v, Index h) {
  return univariate_mcd(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), h);
}

}  // namespace robstat
