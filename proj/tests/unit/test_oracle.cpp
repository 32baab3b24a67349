#include "robstat/oracle.hpp"

#include "generators.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace robstat;

namespace {

std::vector<Index> iota_rows(Index n) {
  std::vector<Index> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), Index{0});
  return r;
}

}  // namespace

TEST(ExactMcd, FullSubsetIsSampleMoments) {
  testgen::Gen g(1);
  const Matrix x = g.normal(9, 2);
  const auto ex = exact_mcd(Dataset(x), 9);
  Vector m;
  Matrix c;
  reference::sample_moments(x, iota_rows(9), m, c);
  EXPECT_LT((ex.estimate.center - m).norm(), 1e-12);
  EXPECT_LT((ex.estimate.scatter - c).norm(), 1e-12);
}

TEST(ExactMcd, PicksCleanCluster) {
  testgen::Gen g(2);
  Matrix x = g.normal(12, 2);
  for (Index i = 9; i < 12; ++i) x(i, 0) += 100.0;
  const auto ex = exact_mcd(Dataset(x), 9);
  EXPECT_EQ(ex.subset.indices(), (std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(ExactMcd, AgreesWithIndependentEnumeration) {
  testgen::Gen g(3);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix x = g.normal(10, 2);
    double best = std::numeric_limits<double>::infinity();
    reference::subsets(10, 6, [&](const std::vector<Index>& rows) {
      Vector m;
      Matrix c;
      reference::sample_moments(x, rows, m, c);
      best = std::min(best, reference::det_of(c));
    });
    EXPECT_NEAR(exact_mcd(Dataset(x), 6).estimate.det, best, 1e-12 * std::max(1.0, best));
  }
}

TEST(ExactMcd, NeverWorseThanFastMcd) {
  testgen::Gen g(4);
  for (int rep = 0; rep < 100; ++rep) {
    const Dataset d(g.normal(12, 2));
    McdConfig cfg;
    cfg.h = 7;
    cfg.nstarts = 50;
    cfg.seed = static_cast<std::uint64_t>(rep);
    EXPECT_LE(exact_mcd(d, 7).estimate.det, fast_mcd(d, cfg).raw_objective * (1 + 1e-12));
  }
}

TEST(ExactMcd, PermutationInvariant) {
  testgen::Gen g(5);
  const Matrix x = g.normal(11, 2);
  auto perm = g.distinct(11, 11);
  Matrix y(11, 2);
  for (Index i = 0; i < 11; ++i) y.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(exact_mcd(Dataset(x), 7).estimate.det, exact_mcd(Dataset(y), 7).estimate.det, 1e-14);
}

TEST(ExactMcd, Guard) {
  testgen::Gen g(6);
  try {
    exact_mcd(Dataset(g.normal(60, 2)), 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooLarge);
  }
}

TEST(ExactLts, FullSubsetIsOls) {
  testgen::Gen g(7);
  const Matrix x = g.normal(10, 2);
  const Vector y = g.normal_vector(10);
  const auto ex = exact_lts(x, y, 10);
  EXPECT_LT((ex.theta - reference::ols(x, y)).norm(), 1e-10);
}

TEST(ExactLts, ExactLineWithVerticalOutliers) {
  Matrix x(12, 1);
  Vector y(12);
  for (Index i = 0; i < 12; ++i) {
    x(i, 0) = static_cast<double>(i);
    y(i) = i < 8 ? 3.0 * i - 1.0 : 50.0 + i;
  }
  const auto ex = exact_lts(x, y, 8);
  EXPECT_NEAR(ex.objective, 0.0, 1e-18);
  EXPECT_NEAR(ex.theta(0), 3.0, 1e-10);
  EXPECT_NEAR(ex.theta(1), -1.0, 1e-10);
}

TEST(ExactLts, ObjectiveRanksAllResiduals) {
  testgen::Gen g(8);
  const Matrix x = g.normal(10, 1);
  const Vector y = g.normal_vector(10);
  const auto ex = exact_lts(x, y, 6);
  Matrix u(10, 2);
  u << x, Vector::Ones(10);
  const Vector r = y - u * ex.theta;
  EXPECT_NEAR(ex.objective, trimmed_sum_of_squares(r, 6), 1e-12);
  double best = std::numeric_limits<double>::infinity();
  reference::subsets(10, 6, [&](const std::vector<Index>& rows) {
    Matrix xs(6, 1);
    Vector ys(6);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      xs(static_cast<Index>(k), 0) = x(rows[k], 0);
      ys(static_cast<Index>(k)) = y(rows[k]);
    }
    const Vector th = reference::ols(xs, ys);
    best = std::min(best, trimmed_sum_of_squares(y - u * th, 6));
  });
  EXPECT_NEAR(ex.objective, best, 1e-12);
}

TEST(ExactLts, NeverWorseThanFastLts) {
  testgen::Gen g(9);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix x = g.normal(12, 1);
    const Vector y = x.col(0) * 2.0 + g.normal_vector(12);
    LtsConfig cfg;
    cfg.h = 7;
    cfg.nstarts = 50;
    cfg.seed = static_cast<std::uint64_t>(rep);
    EXPECT_LE(exact_lts(x, y, 7).objective, fast_lts(x, y, cfg).raw.objective * (1 + 1e-12) + 1e-14);
  }
}

TEST(Contaminate, Basics) {
  testgen::Gen g(10);
  const Dataset d(g.normal(20, 3));
  EXPECT_EQ(contaminate(d, {0, 1e6, Placement::PointMass, std::nullopt}, 1).values(), d.values());
  const auto one = contaminate(d, {1, 1e6, Placement::PointMass, std::nullopt}, 1);
  Index changed = 0;
  for (Index i = 0; i < 20; ++i) changed += one.values().row(i) != d.values().row(i);
  EXPECT_EQ(changed, 1);
  EXPECT_EQ(contaminate(d, {5, 1e3, Placement::Cluster, std::nullopt}, 4).values(),
            contaminate(d, {5, 1e3, Placement::Cluster, std::nullopt}, 4).values());
  EXPECT_THROW(contaminate(d, {20, 1.0, Placement::PointMass, std::nullopt}, 1), Error);
}

TEST(Contaminate, McdResistsClusterWhileMeanBreaks) {
  testgen::Gen g(11);
  const Dataset d(g.normal(40, 2));
  const Index h = default_h(40, 2);
  McdConfig cfg;
  cfg.h = h;
  cfg.nstarts = 200;
  const auto clean = fast_mcd(d, cfg);
  const double scale = clean.raw.scatter.norm();
  const Vector mean0 = d.values().colwise().mean();
  double prev_mean_shift = 0.0;
  for (double mag : {1e2, 1e3, 1e4, 1e5, 1e6}) {
    const auto bad = contaminate(d, {40 - h, mag, Placement::Cluster, std::nullopt}, 3);
    const auto r = fast_mcd(bad, cfg);
    EXPECT_LT((r.raw.center - clean.raw.center).norm(), 10.0 * scale) << mag;
    const double ms = (Vector(bad.values().colwise().mean()) - mean0).norm();
    EXPECT_GT(ms, 5.0 * prev_mean_shift);
    prev_mean_shift = ms;
  }
}

TEST(BreakdownProbe, Estimators) {
  testgen::Gen g(12);
  ProbeOptions opt;
  opt.nstarts = 100;
  const Dataset loc(g.normal(40, 2));
  EXPECT_EQ(breakdown_probe(ProbeEstimator::ClassicalMean, loc, 40, opt), 0);
  // Exact finite-sample breakdown is min(n - h + 1, h - p) / n; at the
  // half-sample h the second term binds and the probe survives one row less.
  const Index h = (40 + 2 + 1) / 2;
  EXPECT_EQ(breakdown_probe(ProbeEstimator::Mcd, loc, h, opt), std::min(40 - h, h - 2 - 1));

  Matrix reg(40, 2);
  reg.col(0) = g.normal_vector(40);
  reg.col(1) = reg.col(0) * 2.0 + g.normal_vector(40) * 0.5;
  EXPECT_EQ(breakdown_probe(ProbeEstimator::Ols, Dataset(reg), 40, opt), 0);
  EXPECT_EQ(breakdown_probe(ProbeEstimator::Lts, Dataset(reg), 30, opt), 40 - 30);
  EXPECT_EQ(breakdown_probe(ProbeEstimator::Mcd, loc, 30, opt), 40 - 30);
}
