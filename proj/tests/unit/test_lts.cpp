#include "robstat/lts.hpp"
#include "robstat/oracle.hpp"

#include "generators.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace robstat;

namespace {

struct RegData {
  Matrix x;
  Vector y;
};

/// y = x b + 1 + N(0, 1), with an optional block of bad leverage points.
RegData regression(testgen::Gen& g, Index n, Index p, Index n_bad = 0) {
  RegData d{g.normal(n, p), Vector()};
  Vector b(p);
  for (Index j = 0; j < p; ++j) b(j) = static_cast<double>(j + 1);
  d.y = d.x * b + g.normal_vector(n);
  d.y.array() += 1.0;
  for (Index i = n - n_bad; i < n; ++i) {
    d.x.row(i).setConstant(10.0);
    d.y(i) = -50.0 + g.normal();
  }
  return d;
}

}  // namespace

TEST(LtsScale, Examples) {
  EXPECT_NEAR(lts_scale(Vector::Constant(7, -2.5), 7), 2.5, 1e-14);
  Vector r(4);
  r << 0, 0, 0, 10;
  EXPECT_EQ(lts_scale(r, 3), 0.0);
  testgen::Gen g(1);
  EXPECT_NEAR(lts_scale(g.normal_vector(10000), 7500), 1.0, 0.05);
  // sqrt(factor) * trimmed RMS, with the factor computed independently
  const Vector e = g.normal_vector(200);
  const double f = 0.75 / reference::chi2_cdf(3, reference::chi2_quantile(1, 0.75));
  std::vector<double> sq;
  for (Index i = 0; i < e.size(); ++i) sq.push_back(e(i) * e(i));
  std::sort(sq.begin(), sq.end());
  double s = 0;
  for (int i = 0; i < 150; ++i) s += sq[static_cast<std::size_t>(i)];
  EXPECT_NEAR(lts_scale(e, 150), std::sqrt(f * s / 150.0), 1e-12);
}

TEST(FastLts, ExactFitWithVerticalOutliers) {
  Matrix x(40, 1);
  Vector y(40);
  for (Index i = 0; i < 40; ++i) {
    x(i, 0) = 0.25 * i;
    y(i) = i < 30 ? 2.0 * x(i, 0) : 100.0 + i;
  }
  LtsConfig cfg;
  cfg.h = 30;
  const auto r = fast_lts(x, y, cfg);
  EXPECT_NEAR(r.raw.theta(0), 2.0, 1e-10);
  EXPECT_NEAR(r.raw.theta(1), 0.0, 1e-10);
  EXPECT_NEAR(r.raw.objective, 0.0, 1e-16);
  EXPECT_TRUE(r.raw.exact_fit);
  EXPECT_EQ(r.raw.sigma, 0.0);
}

TEST(FastLts, FullSubsetIsOls) {
  testgen::Gen g(2);
  const auto d = regression(g, 50, 3);
  LtsConfig cfg;
  cfg.h = 50;
  const auto r = fast_lts(d.x, d.y, cfg);
  EXPECT_LT((r.raw.theta - reference::ols(d.x, d.y)).norm(), 1e-10);
  EXPECT_LT((ols(d.x, d.y) - reference::ols(d.x, d.y)).norm(), 1e-10);
}

TEST(FastLts, MatchesExactOracle) {
  testgen::Gen g(3);
  int match = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = regression(g, 12, 1);
    LtsConfig cfg;
    cfg.h = 7;
    cfg.seed = static_cast<std::uint64_t>(rep);
    const double fast = fast_lts(d.x, d.y, cfg).raw.objective;
    const double exact = exact_lts(d.x, d.y, 7).objective;
    EXPECT_GE(fast, exact * (1 - 1e-10));
    match += std::abs(fast - exact) <= 1e-10 * std::max(1.0, exact);
  }
  EXPECT_GE(match, 95);
}

TEST(FastLts, ResistsBadLeverage) {
  testgen::Gen g(4);
  const auto d = regression(g, 200, 2, 40);
  const auto r = fast_lts(d.x, d.y);
  EXPECT_NEAR(r.reweighted.theta(0), 1.0, 0.3);
  EXPECT_NEAR(r.reweighted.theta(1), 2.0, 0.3);
  EXPECT_NEAR(r.reweighted.theta(2), 1.0, 0.3);
  for (Index i = 160; i < 200; ++i) EXPECT_FALSE(r.reweighted.weights[i]);
  EXPECT_GT((ols(d.x, d.y).head(2) - Vector(Eigen::Vector2d(1, 2))).norm(), 1.0);
}

TEST(FastLts, Deterministic) {
  testgen::Gen g(5);
  const auto d = regression(g, 60, 2, 10);
  LtsConfig cfg;
  cfg.seed = 17;
  const auto a = fast_lts(d.x, d.y, cfg), b = fast_lts(d.x, d.y, cfg);
  EXPECT_EQ(a.raw.theta, b.raw.theta);
  EXPECT_EQ(a.raw.best_subset, b.raw.best_subset);
  EXPECT_EQ(a.reweighted.theta, b.reweighted.theta);
}

TEST(FastLts, Equivariance) {
  testgen::Gen g(6);
  const auto d = regression(g, 60, 3, 8);
  LtsConfig cfg;
  cfg.seed = 3;
  cfg.nstarts = 200;
  const auto r = fast_lts(d.x, d.y, cfg);
  const Vector th = r.raw.theta;

  // regression: y + X v + c
  const Vector v = g.normal_vector(3);
  const double c = 4.0;
  Vector y1 = d.y + d.x * v;
  y1.array() += c;
  Vector expect1 = th;
  expect1.head(3) += v;
  expect1(3) += c;
  EXPECT_LT(testgen::rel_err(fast_lts(d.x, y1, cfg).raw.theta, expect1), 1e-8);

  // scale: c y
  EXPECT_LT(testgen::rel_err(fast_lts(d.x, Vector(-3.0 * d.y), cfg).raw.theta, Vector(-3.0 * th)), 1e-8);

  // affine: X A' + 1 w'
  const Matrix a = g.nonsingular(3);
  const Vector w = g.normal_vector(3);
  const auto t = fast_lts(testgen::affine(d.x, a, w), d.y, cfg).raw.theta;
  const Matrix ainv = a.inverse();
  Vector expect3(4);
  expect3.head(3) = ainv.transpose() * th.head(3);
  expect3(3) = th(3) - expect3.head(3).dot(w);
  EXPECT_LT(testgen::rel_err(t, expect3), 1e-8);
}

TEST(FastLts, ObjectiveMonotoneAcrossCSteps) {
  testgen::Gen g(7);
  const auto d = regression(g, 40, 2, 6);
  Matrix u(40, 3);
  u << d.x, Vector::Ones(40);
  for (int rep = 0; rep < 20; ++rep) {
    auto rows = g.distinct(40, 30);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 50; ++it) {
      Matrix us(30, 3);
      Vector ys(30);
      for (Index k = 0; k < 30; ++k) {
        us.row(k) = u.row(rows[static_cast<std::size_t>(k)]);
        ys(k) = d.y(rows[static_cast<std::size_t>(k)]);
      }
      const Vector th = us.colPivHouseholderQr().solve(ys);
      const Vector r = d.y - u * th;
      const double obj = trimmed_sum_of_squares(r, 30);
      EXPECT_LE(obj, prev * (1 + 1e-12));
      prev = obj;
      std::vector<Index> order(40);
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return std::abs(r(i)) < std::abs(r(j)); });
      order.resize(30);
      std::sort(order.begin(), order.end());
      std::sort(rows.begin(), rows.end());
      if (order == rows) break;
      rows = order;
    }
  }
}

TEST(FastLts, Preconditions) {
  testgen::Gen g(8);
  EXPECT_THROW(fast_lts(g.normal(3, 2), g.normal_vector(3)), Error);
  Matrix x = g.normal(20, 2);
  x.col(1) = x.col(0);
  try {
    fast_lts(x, g.normal_vector(20));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankDeficient);
  }
  EXPECT_THROW(fast_lts(g.normal(20, 2), g.normal_vector(19)), Error);
}

TEST(ReweightLts, NoOutliersGivesOls) {
  testgen::Gen g(9);
  const auto d = regression(g, 80, 2);
  LtsFit raw;
  raw.theta = reference::ols(d.x, d.y);
  raw.sigma = 100.0;
  const auto rw = reweight_lts(d.x, d.y, raw, 0.975);
  EXPECT_EQ(rw.weights.count(), 80);
  EXPECT_LT((rw.theta - reference::ols(d.x, d.y)).norm(), 1e-10);
}

TEST(ReweightLts, VerticalOutlierDropped) {
  testgen::Gen g(10);
  auto d = regression(g, 80, 1);
  LtsFit raw;
  raw.theta = Vector(Eigen::Vector2d(1.0, 1.0));
  raw.sigma = 1.0;
  d.y(5) = d.x(5, 0) + 1.0 + 20.0;
  const auto rw = reweight_lts(d.x, d.y, raw, 0.975);
  EXPECT_FALSE(rw.weights[5]);
  raw.sigma = 0.0;
  EXPECT_THROW(reweight_lts(d.x, d.y, raw, 0.975), Error);
}

TEST(ReweightLts, MoreEfficientThanRaw) {
  testgen::Gen g(11);
  double raw_mse = 0, rw_mse = 0;
  LtsConfig cfg;
  cfg.nstarts = 50;
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = regression(g, 500, 2);
    cfg.seed = static_cast<std::uint64_t>(rep);
    const auto r = fast_lts(d.x, d.y, cfg);
    raw_mse += (r.raw.slope() - Vector(Eigen::Vector2d(1, 2))).squaredNorm();
    rw_mse += (r.reweighted.slope() - Vector(Eigen::Vector2d(1, 2))).squaredNorm();
  }
  EXPECT_LE(rw_mse, raw_mse);
}

TEST(RegressionOutlierMap, Flags) {
  testgen::Gen g(12);
  auto d = regression(g, 100, 1);
  d.x(0, 0) = 0.0;
  d.y(0) = 1.0;  // regular
  d.x(1, 0) = 15.0;
  d.y(1) = 16.0;  // good leverage
  d.x(2, 0) = 15.0;
  d.y(2) = -40.0;  // bad leverage
  d.x(3, 0) = 0.0;
  d.y(3) = 30.0;  // vertical outlier
  const auto lts = fast_lts(d.x, d.y);
  const auto mcd = fast_mcd(d.x);
  const auto t = regression_outlier_map(d.x, d.y, lts.reweighted, mcd, 0.975);
  ASSERT_EQ(t.rows.size(), 100u);
  EXPECT_EQ(t.rows[0].flag, PointType::Regular);
  EXPECT_EQ(t.rows[1].flag, PointType::GoodLeverage);
  EXPECT_EQ(t.rows[2].flag, PointType::BadLeverage);
  EXPECT_EQ(t.rows[3].flag, PointType::VerticalOutlier);
  EXPECT_NEAR(t.x_cutoff, std::sqrt(reference::chi2_quantile(1, 0.975)), 1e-10);
  EXPECT_NEAR(t.y_cutoff, std::sqrt(reference::chi2_quantile(1, 0.975)), 1e-10);
  EXPECT_NEAR(t.rows[5].x_dist, mcd.robust_distances(5), 1e-12);
  EXPECT_NEAR(t.rows[5].y_dist, lts.reweighted.std_residuals(5), 1e-12);
}
