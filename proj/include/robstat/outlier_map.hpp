#pragma once

#include "robstat/datamodel.hpp"

#include <cmath>
#include <string_view>
#include <vector>

namespace robstat {

enum class PointType { Regular, GoodLeverage, VerticalOutlier, OrthogonalOutlier, BadLeverage };

enum class MapKind { Regression, MvRegression, Pca };

inline const char* to_string(PointType t) {
  switch (t) {
    case PointType::Regular: return "regular";
    case PointType::GoodLeverage: return "good_leverage";
    case PointType::VerticalOutlier: return "vertical_outlier";
    case PointType::OrthogonalOutlier: return "orthogonal_outlier";
    case PointType::BadLeverage: return "bad_leverage";
  }
  return "regular";
}

inline const char* to_string(MapKind k) {
  switch (k) {
    case MapKind::Regression: return "regression_map";
    case MapKind::MvRegression: return "mvreg_map";
    case MapKind::Pca: return "pca_map";
  }
  return "regression_map";
}

struct OutlierMapRow {
  double x_dist = 0.0;  ///< robust distance in x-space (or score distance)
  double y_dist = 0.0;  ///< standardized residual, residual distance or orthogonal distance
  PointType flag = PointType::Regular;
};

/// Plot-ready outlier map. For regression maps y_dist is the signed
/// standardized residual and is compared in absolute value.
struct OutlierMapTable {
  MapKind kind = MapKind::Regression;
  std::vector<OutlierMapRow> rows;
  double x_cutoff = 0.0;
  double y_cutoff = 0.0;
  double cutoff_prob = 0.975;
};

inline PointType classify_point(MapKind kind, double x_dist, double y_dist, double x_cutoff,
                                double y_cutoff) {
  const bool far_x = x_dist > x_cutoff;
  const bool far_y = std::abs(y_dist) > y_cutoff;
  if (far_x && far_y) return PointType::BadLeverage;
  if (far_x) return PointType::GoodLeverage;
  if (far_y) return kind == MapKind::Pca ? PointType::OrthogonalOutlier : PointType::VerticalOutlier;
  return PointType::Regular;
}

inline OutlierMapTable make_outlier_map(MapKind kind, const Vector& x_dist, const Vector& y_dist,
                                        double x_cutoff, double y_cutoff, double cutoff_prob) {
  if (x_dist.size() != y_dist.size()) {
    throw Error(Errc::LengthMismatch, "outlier map columns differ in length");
  }
  OutlierMapTable t{kind, {}, x_cutoff, y_cutoff, cutoff_prob};
  t.rows.reserve(static_cast<std::size_t>(x_dist.size()));
  for (Index i = 0; i < x_dist.size(); ++i) {
    t.rows.push_back({x_dist(i), y_dist(i), classify_point(kind, x_dist(i), y_dist(i), x_cutoff, y_cutoff)});
  }
  return t;
}

}  // namespace robstat
