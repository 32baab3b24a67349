#pragma once

// Plot-ready diagnostic tables with a fixed CSV layout:
//   index,x_dist,y_dist,flag
// plus four scalar keys (kind, x_cutoff, y_cutoff, cutoff_prob) for a sidecar.

#include "robstat/datamodel.hpp"
#include "robstat/outlier_map.hpp"
#include "robstat/unirobust.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace robstat {

inline constexpr const char* kDiagnosticHeader = "index,x_dist,y_dist,flag";

struct DiagnosticRow {
  Index index = 0;  ///< 1-based, input order
  double x_dist = 0.0;
  double y_dist = 0.0;
  std::string flag;
};

struct DiagnosticTable {
  std::string kind;  ///< index_distance, dd_plot, regression_map, mvreg_map or pca_map
  std::vector<DiagnosticRow> rows;
  double x_cutoff = std::numeric_limits<double>::quiet_NaN();  ///< NaN when there is none
  double y_cutoff = std::numeric_limits<double>::quiet_NaN();
  double cutoff_prob = 0.975;

  std::size_t flagged(const std::string& flag) const {
    std::size_t c = 0;
    for (const auto& r : rows) c += r.flag == flag;
    return c;
  }
};

/// Shortest round-trip decimal form; "nan", "inf" and "-inf" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// x_dist holds the 1-based index, y_dist the distance; rows above the cutoff
/// are flagged "outlier".
inline DiagnosticTable index_distance_table(const Vector& distances, double cutoff, double cutoff_prob = 0.975) {
  DiagnosticTable t;
  t.kind = "index_distance";
  t.y_cutoff = cutoff;
  t.cutoff_prob = cutoff_prob;
  for (Index i = 0; i < distances.size(); ++i) {
    if (distances(i) < 0.0) throw Error(Errc::InvalidArgument, "distances must be >= 0");
    t.rows.push_back({i + 1, static_cast<double>(i + 1), distances(i), distances(i) > cutoff ? "outlier" : "regular"});
  }
  return t;
}

/// Classical against robust distances with the common cutoff
/// sqrt(chi2_{p,cutoff_prob}). Flags: regular, classical_only, robust_only, both.
inline DiagnosticTable dd_plot_table(const Vector& md, const Vector& rd, Index p, double cutoff_prob = 0.975) {
  if (md.size() != rd.size()) throw Error(Errc::LengthMismatch, "distance vectors differ in length");
  DiagnosticTable t;
  t.kind = "dd_plot";
  t.x_cutoff = t.y_cutoff = chi2_cutoff(p, cutoff_prob);
  t.cutoff_prob = cutoff_prob;
  for (Index i = 0; i < md.size(); ++i) {
    const bool c = md(i) > t.x_cutoff, r = rd(i) > t.y_cutoff;
    t.rows.push_back({i + 1, md(i), rd(i), c && r ? "both" : c ? "classical_only" : r ? "robust_only" : "regular"});
  }
  return t;
}

inline DiagnosticTable to_table(const OutlierMapTable& m) {
  DiagnosticTable t;
  t.kind = to_string(m.kind);
  t.x_cutoff = m.x_cutoff;
  t.y_cutoff = m.y_cutoff;
  t.cutoff_prob = m.cutoff_prob;
  Index i = 0;
  for (const auto& r : m.rows) t.rows.push_back({++i, r.x_dist, r.y_dist, to_string(r.flag)});
  return t;
}

inline void write_csv(std::ostream& os, const DiagnosticTable& t) {
  os << kDiagnosticHeader << '\n';
  for (const auto& r : t.rows) {
    os << r.index << ',' << format_number(r.x_dist) << ',' << format_number(r.y_dist) << ',' << r.flag << '\n';
  }
}

}  // namespace robstat
