#pragma once

// Robust quadratic and linear discriminant analysis from per-group
// reweighted MCD estimates.

#include "robstat/datamodel.hpp"
#include "robstat/detail/linalg.hpp"
#include "robstat/mcd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

namespace robstat {

enum class DiscriminantMode { Quadratic, Linear };

/// How membership probabilities are estimated.
enum class PriorRule {
  RegularFrequency,  ///< share of weight-1 rows per group
  GroupFrequency,    ///< n_j / n
};

struct GroupModel {
  std::vector<int> groups;  ///< ascending group ids
  std::vector<Vector> centers;
  std::vector<Matrix> scatters;
  std::vector<Index> sizes;
  std::vector<double> priors;
  std::vector<WeightVector> weights;  ///< per group, in the group's row order
  std::optional<Matrix> pooled;
  DiscriminantMode mode = DiscriminantMode::Quadratic;

  // Cached by finalize().
  std::vector<Matrix> inverses;
  std::vector<double> log_dets;
  Matrix pooled_inverse;

  Index group_count() const { return static_cast<Index>(groups.size()); }

  void finalize() {
    inverses.clear();
    log_dets.clear();
    if (mode == DiscriminantMode::Linear) {
      const detail::SymEigen eig(*pooled);
      if (eig.singular()) throw Error(Errc::SingularGroupScatter, "pooled scatter is singular");
      pooled_inverse = eig.inverse();
      return;
    }
    for (std::size_t j = 0; j < scatters.size(); ++j) {
      const detail::SymEigen eig(scatters[j]);
      if (eig.singular()) {
        throw Error(Errc::SingularGroupScatter, "scatter of group " + std::to_string(groups[j]) + " is singular");
      }
      inverses.push_back(eig.inverse());
      log_dets.push_back(eig.log_det());
    }
  }
};

namespace detail {

inline std::map<int, std::vector<Index>> split_groups(const Matrix& x, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != x.rows()) {
    throw Error(Errc::LengthMismatch, "labels and data differ in length");
  }
  std::map<int, std::vector<Index>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) rows[labels[i]].push_back(static_cast<Index>(i));
  for (const auto& [g, idx] : rows) {
    if (static_cast<Index>(idx.size()) <= x.cols() + 1) {
      throw Error(Errc::GroupTooSmall, "group " + std::to_string(g) + " has " +
                                           std::to_string(idx.size()) + " rows; needs more than p + 1");
    }
  }
  return rows;
}

inline void pool(GroupModel& m) {
  const Index p = m.centers.front().size();
  Matrix s = Matrix::Zero(p, p);
  Index total = 0;
  for (std::size_t j = 0; j < m.scatters.size(); ++j) {
    s += static_cast<double>(m.sizes[j]) * m.scatters[j];
    total += m.sizes[j];
  }
  m.pooled = s / static_cast<double>(total);
}

}  // namespace detail

/// Per-group reweighted MCD; each group's h comes from its own size and
/// cfg.alpha (cfg.h is ignored).
inline GroupModel fit_rqda(const Matrix& x, const std::vector<int>& labels, const McdConfig& cfg = {},
                           PriorRule rule = PriorRule::RegularFrequency) {
  const auto rows = detail::split_groups(x, labels);
  GroupModel m;
  Index regular_total = 0;
  std::vector<Index> regular;
  for (const auto& [g, idx] : rows) {
    McdConfig gcfg = cfg;
    gcfg.h = 0;
    McdResult r;
    try {
      r = fast_mcd(select_rows(x, idx), gcfg);
    } catch (const Error& e) {
      if (e.code() == Errc::DegenerateData) {
        throw Error(Errc::SingularGroupScatter, "group " + std::to_string(g) + " is degenerate");
      }
      throw;
    }
    if (r.exact_fit) throw Error(Errc::SingularGroupScatter, "group " + std::to_string(g) + " has an exact fit");
    m.groups.push_back(g);
    m.centers.push_back(r.reweighted.center);
    m.scatters.push_back(r.reweighted.scatter);
    m.sizes.push_back(static_cast<Index>(idx.size()));
    regular.push_back(r.weights.count());
    regular_total += r.weights.count();
    m.weights.push_back(std::move(r.weights));
  }
  for (std::size_t j = 0; j < m.groups.size(); ++j) {
    m.priors.push_back(rule == PriorRule::RegularFrequency
                           ? static_cast<double>(regular[j]) / static_cast<double>(regular_total)
                           : static_cast<double>(m.sizes[j]) / static_cast<double>(x.rows()));
  }
  m.mode = DiscriminantMode::Quadratic;
  m.finalize();
  return m;
}

/// Group centers as in fit_rqda, common scatter sum_j n_j Sigma_j / n.
inline GroupModel fit_rlda(const Matrix& x, const std::vector<int>& labels, const McdConfig& cfg = {},
                           PriorRule rule = PriorRule::RegularFrequency) {
  GroupModel m = fit_rqda(x, labels, cfg, rule);
  detail::pool(m);
  m.mode = DiscriminantMode::Linear;
  m.finalize();
  return m;
}

/// Group means and sample covariances, priors n_j / n.
inline GroupModel fit_classical(const Matrix& x, const std::vector<int>& labels,
                                DiscriminantMode mode = DiscriminantMode::Linear) {
  const auto rows = detail::split_groups(x, labels);
  GroupModel m;
  for (const auto& [g, idx] : rows) {
    const auto est = classical_estimate(select_rows(x, idx));
    m.groups.push_back(g);
    m.centers.push_back(est.center);
    m.scatters.push_back(est.scatter);
    m.sizes.push_back(static_cast<Index>(idx.size()));
    m.priors.push_back(static_cast<double>(idx.size()) / static_cast<double>(x.rows()));
    m.weights.emplace_back(static_cast<Index>(idx.size()), true);
  }
  m.mode = mode;
  if (mode == DiscriminantMode::Linear) detail::pool(m);
  m.finalize();
  return m;
}

/// Quadratic scores -ln|S_j|/2 - d_j(x)^2/2 + ln p_j, or in linear mode
/// mu_j' S^-1 x - mu_j' S^-1 mu_j / 2 + ln p_j.
inline Vector discriminant_scores(const GroupModel& m, const Vector& x) {
  Vector s(m.group_count());
  for (Index j = 0; j < m.group_count(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Vector& mu = m.centers[ju];
    if (m.mode == DiscriminantMode::Quadratic) {
      const Vector d = x - mu;
      s(j) = -0.5 * m.log_dets[ju] - 0.5 * d.dot(m.inverses[ju] * d) + std::log(m.priors[ju]);
    } else {
      const Vector a = m.pooled_inverse * mu;
      s(j) = a.dot(x) - 0.5 * a.dot(mu) + std::log(m.priors[ju]);
    }
  }
  return s;
}

/// Group id with the largest score; exact ties go to the smallest id.
inline int classify(const GroupModel& m, const Vector& x) {
  const Vector s = discriminant_scores(m, x);
  Index best = 0;
  for (Index j = 1; j < s.size(); ++j)
    if (s(j) > s(best)) best = j;
  return m.groups[static_cast<std::size_t>(best)];
}

inline std::vector<int> classify(const GroupModel& m, const Matrix& x) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = classify(m, Vector(x.row(i).transpose()));
  return out;
}

}  // namespace robstat
