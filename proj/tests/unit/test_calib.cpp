#include "robstat/calib.hpp"

#include "generators.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace robstat;

namespace {

struct Latent {
  Matrix x, y, loadings;
};

/// x = T P' + noise with `k` latent columns, y = T c + noise.
Latent latent(testgen::Gen& g, Index n, Index p, Index k, double xnoise, double ynoise) {
  Latent d;
  const Matrix t = g.normal(n, k) * 3.0;
  d.loadings = g.normal(p, k);
  d.x = t * d.loadings.transpose() + xnoise * g.normal(n, p);
  d.y = t * g.normal(k, 1) + ynoise * g.normal(n, 1);
  return d;
}

Matrix centered_cross(const Matrix& a, const Matrix& b) {
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  return ac.transpose() * bc / static_cast<double>(a.rows() - 1);
}

Matrix uniform_noise(testgen::Gen& g, Index n, Index q, double s) { return g.uniform(n, q, -s, s); }

}  // namespace

TEST(Simpls, FirstWeightIsNormalizedCrossCovariance) {
  testgen::Gen g(1);
  const auto d = latent(g, 50, 6, 2, 0.3, 0.2);
  const auto m = simpls(d.x, d.y, 2);
  const Vector sxy = centered_cross(d.x, d.y).col(0);
  const Vector want = sxy / sxy.norm();
  EXPECT_LT(std::min((m.weights_r.col(0) - want).norm(), (m.weights_r.col(0) + want).norm()), 1e-10);
}

TEST(Simpls, FullRankEqualsOls) {
  testgen::Gen g(2);
  const Matrix x = g.normal(40, 5);
  const Matrix y = x * g.normal(5, 1) + g.normal(40, 1);
  const auto m = simpls(x, y, 5);
  const Vector b = reference::ols(x, y);
  EXPECT_LT((m.coefficients.col(0) - b.head(5)).norm(), 1e-8);
  EXPECT_NEAR(m.intercept(0), b(5), 1e-8);
}

TEST(Simpls, StructuralProperties) {
  testgen::Gen g(3);
  for (Index q : {1, 3}) {
    const Matrix x = g.normal(60, 8) * g.nonsingular(8);
    const Matrix y = x * g.normal(8, q) + g.normal(60, q);
    const auto m = simpls(x, y, 4);
    const Matrix t = m.scores(x);
    const Matrix ttt = t.transpose() * t;
    for (Index a = 0; a < 4; ++a) {
      EXPECT_NEAR(m.weights_r.col(a).norm(), 1.0, 1e-12);
      EXPECT_NEAR(m.y_weights_q.col(a).norm(), 1.0, 1e-12);
      for (Index b = 0; b < 4; ++b)
        if (a != b) {
          EXPECT_LT(std::abs(ttt(a, b)), 1e-8 * ttt.diagonal().maxCoeff());
        }
    }
  }
}

TEST(Simpls, FirstPairMaximizesCovariance) {
  testgen::Gen g(4);
  for (Index q : {1, 2}) {
    const Matrix x = g.normal(50, 5) * g.nonsingular(5);
    const Matrix y = x * g.normal(5, q) + g.normal(50, q);
    const Matrix sxy = centered_cross(x, y);
    const auto m = simpls(x, y, 1);
    const double best = m.y_weights_q.col(0).dot(sxy.transpose() * m.weights_r.col(0));
    for (int i = 0; i < 200; ++i) {
      const Vector v = g.normal_vector(5).normalized();
      EXPECT_GE(best, (sxy.transpose() * v).norm() - 1e-10);
    }
  }
}

TEST(Simpls, DeflationIsExact) {
  testgen::Gen g(5);
  const Matrix x = g.normal(50, 7) * g.nonsingular(7);
  const Matrix y = x * g.normal(7, 2) + g.normal(50, 2);
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix sx = xc.transpose() * xc / 49.0;
  const Matrix sxy = centered_cross(x, y);
  const auto b = simpls_basis(sx, sxy, 5);
  Matrix s = sxy;
  for (Index a = 0; a < 5; ++a) {
    s -= b.v.col(a) * (b.v.col(a).transpose() * s);
    for (Index c = 0; c <= a; ++c) EXPECT_LT((b.v.col(c).transpose() * s).norm(), 1e-12 * sxy.norm());
  }
  EXPECT_LT((b.v.transpose() * b.v - Matrix::Identity(5, 5)).norm(), 1e-12);
}

TEST(Simpls, Preconditions) {
  testgen::Gen g(6);
  const Matrix x = g.normal(20, 3);
  EXPECT_THROW(simpls(x, g.normal(19, 1), 1), Error);
  EXPECT_THROW(simpls(x, g.normal(20, 1), 4), Error);
  try {
    simpls(x, Matrix::Ones(20, 1), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankTooLow);
  }
}

TEST(Rsimpls, CloseToSimplsOnCleanData) {
  testgen::Gen g(7);
  double rel = 0.0;
  CalibConfig cfg;
  cfg.nstarts = 100;
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = latent(g, 200, 10, 2, 0.5, 0.5);
    cfg.seed = static_cast<std::uint64_t>(rep);
    const Matrix cs = simpls(d.x, d.y, 2).coefficients;
    rel += (rsimpls(d.x, d.y, 2, cfg).coefficients - cs).norm() / cs.norm();
  }
  EXPECT_LT(rel / 50.0, 0.10);
}

TEST(Rsimpls, SystematicContaminationIsFlagged) {
  testgen::Gen g(8);
  auto d = latent(g, 80, 12, 2, 0.2, 0.2);
  const Matrix clean_x = d.x.bottomRows(68), clean_y = d.y.bottomRows(68);
  // Shift along the latent structure without a matching change in y.
  const Vector shift = d.loadings * Eigen::Vector2d(12.0, -9.0);
  for (Index i = 0; i < 12; ++i) d.x.row(i) += shift.transpose() + 0.1 * g.normal(1, 12);
  const auto m = rsimpls(d.x, d.y, 2);
  const auto t = pls_outlier_map(m, d.x, d.y);
  for (Index i = 0; i < 12; ++i) {
    const auto f = t.rows[static_cast<std::size_t>(i)].flag;
    EXPECT_TRUE(f == PointType::GoodLeverage || f == PointType::BadLeverage) << i;
  }
  const Matrix ref = simpls(clean_x, clean_y, 2).coefficients;
  EXPECT_LT((m.coefficients - ref).norm() / ref.norm(), 0.15);
  EXPECT_GT((simpls(d.x, d.y, 2).coefficients - ref).norm() / ref.norm(), 0.15);
}

TEST(Rsimpls, FullRankWithUnitWeightsIsLeastSquares) {
  testgen::Gen g(9);
  const Matrix x = g.uniform(100, 3, -2, 2);
  const Matrix y = x * g.normal(3, 1) + uniform_noise(g, 100, 1, 0.5);
  const auto m = rsimpls(x, y, 3);
  ASSERT_EQ(m.row_weights.count(), 100);
  const Vector b = reference::ols(x, y);
  EXPECT_LT((m.coefficients.col(0) - b.head(3)).norm(), 1e-8);
  EXPECT_NEAR(m.intercept(0), b(3), 1e-8);
}

TEST(Rsimpls, ResponseAffineEquivariance) {
  testgen::Gen g(10);
  auto d = latent(g, 80, 4, 2, 0.3, 0.3);
  d.y.topRows(6).array() += 15.0;
  CalibConfig cfg;
  cfg.seed = 3;
  const auto m = rsimpls(d.x, d.y, 4, cfg);
  for (double c : {-2.5, 0.3, 7.0}) {
    const double w = 1.7;
    const auto t = rsimpls(d.x, Matrix((c * d.y).array() + w), 4, cfg);
    EXPECT_LT(testgen::rel_err(t.coefficients, c * m.coefficients), 1e-8) << c;
    EXPECT_NEAR(t.intercept(0), c * m.intercept(0) + w, 1e-8 * std::max(1.0, std::abs(t.intercept(0)))) << c;
  }
}

TEST(Rpcr, ExactModelGivesZeroResiduals) {
  testgen::Gen g(11);
  const Matrix t = g.normal(80, 2) * 3.0;
  const Matrix pl = g.orthogonal(6).leftCols(2);
  Matrix x = t * pl.transpose();
  Matrix y = t * g.normal(2, 1);
  y.array() += 2.0;
  for (Index i = 0; i < 16; ++i) {
    x.row(i) += 4.0 * g.normal(1, 6);
    y(i) += 10.0;
  }
  const auto m = rpcr(x, y, 2);
  const Matrix res = y - m.predict(x);
  for (Index i = 16; i < 80; ++i) EXPECT_LT(std::abs(res(i)), 1e-8) << i;
}

TEST(Rpcr, OrthogonalTransformKeepsPredictions) {
  testgen::Gen g(12);
  auto d = latent(g, 70, 6, 2, 0.3, 0.3);
  d.x.topRows(7).array() += 8.0;
  CalibConfig cfg;
  cfg.seed = 2;
  const auto m = rpcr(d.x, d.y, 2, cfg);
  const Matrix a = g.orthogonal(6);
  const Vector v = g.normal_vector(6);
  const Matrix xt = testgen::affine(d.x, a, v);
  const auto t = rpcr(xt, d.y, 2, cfg);
  EXPECT_LT(testgen::rel_err(t.predict(xt), m.predict(d.x)), 1e-8);
  EXPECT_LT((m.coefficients - m.pca.loadings * m.regression.reweighted.B).norm(), 1e-12);
}

TEST(Rpcr, CleanFullRankMatchesOls) {
  testgen::Gen g(13);
  const Matrix x = g.uniform(100, 3, -2, 2);
  const Matrix y = x * g.normal(3, 1) + uniform_noise(g, 100, 1, 0.5);
  const auto m = rpcr(x, y, 3);
  ASSERT_EQ(m.regression.reweighted.weights.count(), 100);
  Matrix u(100, 4);
  u << x, Vector::Ones(100);
  const Vector ols = u * reference::ols(x, y);
  EXPECT_LT((m.predict(x).col(0) - ols).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Rmsecv, ExactRankOneData) {
  testgen::Gen g(14);
  const Vector t = g.normal_vector(30);
  const Matrix x = t * g.normal(1, 5);
  const Matrix y = t * 2.0;
  const auto c = rmsecv(x, y, 1, CalibMethod::Simpls, false);
  ASSERT_EQ(c.rmsecv.size(), 1u);
  EXPECT_NEAR(c.rmsecv[0], 0.0, 1e-10);
  EXPECT_EQ(c.selected_k, 1);
}

TEST(Rmsecv, NoiseGivesFiniteCurve) {
  testgen::Gen g(15);
  const Matrix x = g.normal(25, 4), y = g.normal(25, 1);
  for (auto method : {CalibMethod::Simpls, CalibMethod::Rsimpls, CalibMethod::Rpcr}) {
    CalibConfig cfg;
    cfg.nstarts = 50;
    const auto c = rmsecv(x, y, 3, method, method != CalibMethod::Simpls, cfg);
    ASSERT_EQ(c.k_values, (std::vector<Index>{1, 2, 3}));
    for (double v : c.rmsecv) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
    EXPECT_EQ(c.rmsecv[static_cast<std::size_t>(c.selected_k - 1)],
              *std::min_element(c.rmsecv.begin(), c.rmsecv.end()));
  }
}

TEST(Rmsecv, PlainCurveMatchesManualLeaveOneOut) {
  testgen::Gen g(16);
  const auto d = latent(g, 20, 5, 2, 0.3, 0.3);
  const auto c = rmsecv(d.x, d.y, 3, CalibMethod::Simpls, false);
  const auto r = rmsecv(d.x, d.y, 3, CalibMethod::Simpls, true);
  for (Index k = 1; k <= 3; ++k) {
    double s = 0;
    for (Index i = 0; i < 20; ++i) {
      std::vector<Index> rows;
      for (Index j = 0; j < 20; ++j)
        if (j != i) rows.push_back(j);
      const auto m = simpls(select_rows(d.x, rows), select_rows(d.y, rows), k);
      const double e = d.y(i, 0) - m.predict(d.x.row(i))(0, 0);
      s += e * e;
    }
    EXPECT_NEAR(c.rmsecv[static_cast<std::size_t>(k - 1)], std::sqrt(s / 20.0), 1e-12);
    EXPECT_EQ(r.rmsecv[static_cast<std::size_t>(k - 1)], c.rmsecv[static_cast<std::size_t>(k - 1)]);
  }
}

TEST(Rmsecv, Preconditions) {
  testgen::Gen g(17);
  const Matrix x = g.normal(10, 3), y = g.normal(10, 1);
  try {
    rmsecv(x, y, 9, CalibMethod::Simpls, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewRows);
  }
  EXPECT_THROW(rmsecv(x, y, 0, CalibMethod::Simpls, false), Error);
  EXPECT_STREQ(to_string(CalibMethod::Rsimpls), "rsimpls");
}
