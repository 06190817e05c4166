#include <cmath>

#include <gtest/gtest.h>

#include "lpvslc/errors.h"
#include "lpvslc/scheduling.h"
#include "test_support.h"

namespace lpvslc {
namespace {

const Box kWorkspace{0.0, 0.2, 0.0, 0.2};

TEST(Chi, KroneckerOrdering) {
  const auto v = chi({2.0, 3.0}, 3, 2);
  ASSERT_EQ(v.size(), 6);
  const Eigen::VectorXd ref = (Eigen::VectorXd(6) << 1, 3, 2, 6, 4, 12).finished();
  EXPECT_TRUE(v.isApprox(ref, 0.0));
  EXPECT_THROW(chi({}, 0, 1), ConfigError);
}

TEST(Surface, NormalizationMapsBoxToUnitSquare) {
  const auto n = Normalization::from_box(kWorkspace);
  const auto lo = n.apply({0.0, 0.0});
  const auto hi = n.apply({0.2, 0.2});
  EXPECT_DOUBLE_EQ(lo.qx, -1.0);
  EXPECT_DOUBLE_EQ(lo.qy, -1.0);
  EXPECT_DOUBLE_EQ(hi.qx, 1.0);
  EXPECT_DOUBLE_EQ(hi.qy, 1.0);
}

TEST(Fit, RecoversPlantedBiquadratic) {
  EXPECT_LE(testing::worst_planted_recovery(5, 50, kWorkspace, Normalization::identity()), 1e-9);
  EXPECT_LE(testing::worst_planted_recovery(6, 50, kWorkspace, Normalization::from_box(kWorkspace)),
            1e-9);
}

TEST(Fit, BilinearCornersInterpolateExactly) {
  EXPECT_LE(testing::worst_bilinear_residual(8, 100, kWorkspace), 1e-12);
}

TEST(Fit, OverdeterminedResidualsAreOrthogonalToBasis) {
  FrozenDesignSet set;
  int k = 0;
  for (const auto& p : kWorkspace.grid(5, 5))
    set.samples.push_back({p, std::sin(10.0 * p.qx) + std::cos(7.0 * p.qy) + 0.01 * (k++ % 3), ""});
  const auto norm = Normalization::from_box(kWorkspace);
  const auto fit = fit_surface(set, 3, 3, norm);
  EXPECT_FALSE(fit.report.rank_deficient);
  EXPECT_EQ(fit.report.rank, 9);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(9);
  double sq = 0.0;
  for (std::size_t n = 0; n < set.samples.size(); ++n) {
    g += fit.report.residuals[n] * chi(norm.apply(set.samples[n].p), 3, 3);
    sq += fit.report.residuals[n] * fit.report.residuals[n];
  }
  EXPECT_LT(g.norm(), 1e-12);
  EXPECT_NEAR(sq, fit.report.residual_norm_sq, 1e-15);
  EXPECT_GT(fit.report.residual_norm_sq, 1e-6);
}

TEST(Fit, RankDeficientGivesMinimumNorm) {
  FrozenDesignSet set;
  for (double y : {0.0, 0.1, 0.2}) set.samples.push_back({{0.1, y}, 1.0 + 2.0 * y, "Hz"});
  const auto fit = fit_surface(set, 2, 2);
  EXPECT_TRUE(fit.report.rank_deficient);
  EXPECT_EQ(fit.report.rank, 2);
  EXPECT_TRUE(std::isinf(fit.report.condition));
  for (const auto& s : set.samples) EXPECT_NEAR(eval_surface(fit.surface, s.p), s.value, 1e-12);
  // Minimum-norm solution lies in the row space spanned by chi at the samples.
  Eigen::MatrixXd a(3, 4);
  for (int r = 0; r < 3; ++r) a.row(r) = chi(set.samples[static_cast<std::size_t>(r)].p, 2, 2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::MatrixXd null = svd.matrixV().rightCols(2);
  EXPECT_LT((null.transpose() * fit.surface.theta).norm(), 1e-12);
}

TEST(Fit, InputErrors) {
  FrozenDesignSet set;
  EXPECT_THROW(fit_surface(set, 1, 1), ConfigError);
  set.samples = {{{0.0, 0.0}, 1.0, "Hz"}, {{0.1, 0.0}, 2.0, ""}};
  EXPECT_THROW(fit_surface(set, 1, 1), ConfigError);
  set.samples = {{{0.0, 0.0}, 1.0, "Hz"}, {{0.0, 0.0}, 2.0, "Hz"}};
  EXPECT_THROW(fit_surface(set, 1, 1), ConfigError);
  CoefficientSurface s;
  s.order_i = 2;
  EXPECT_THROW(eval_surface(s, {}), ConfigError);
}

}  // namespace
}  // namespace lpvslc
