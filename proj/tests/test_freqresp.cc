#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lpvslc/errors.h"
#include "lpvslc/filters.h"
#include "lpvslc/freqresp.h"
#include "test_support.h"

namespace lpvslc {
namespace {

using testing::random_first_order;
using testing::random_stable_system;

TEST(FrequencyGrid, LogspaceEndpointsAndRefinement) {
  const auto g = FrequencyGrid::logspace(1.0, 1000.0, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.hz.front(), 1.0);
  EXPECT_NEAR(g.hz[1], 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.hz.back(), 1000.0);
  const auto r = g.refined(3);
  EXPECT_EQ(r.size(), 10u);
  EXPECT_NEAR(r.hz[3], 10.0, 1e-12);
  EXPECT_THROW(FrequencyGrid::logspace(10.0, 1.0, 5), ConfigError);
  EXPECT_THROW(FrequencyGrid::logspace(0.0, 1.0, 5), ConfigError);
}

TEST(Frf, FirstOrderClosedForm) {
  StateSpace ss;
  ss.a = Eigen::MatrixXd::Constant(1, 1, -3.0);
  ss.b = Eigen::MatrixXd::Constant(1, 1, 2.0);
  ss.c = Eigen::MatrixXd::Constant(1, 1, 5.0);
  ss.d = Eigen::MatrixXd::Constant(1, 1, 0.5);
  for (double w : {0.0, 0.1, 3.0, 1e4}) {
    const cdouble ref = 10.0 / cdouble(3.0, w) + 0.5;
    EXPECT_LE(std::abs(frf_at(ss, w) - ref), 1e-14 * std::abs(ref));
  }
}

TEST(EquivalentPlant, MatchesTwoByTwoLft) {
  std::mt19937 rng(7);
  const auto grid = FrequencyGrid::logspace(0.1, 1000.0, 200);
  for (int trial = 0; trial < 10; ++trial) {
    const auto plant = random_stable_system(rng, 5, 2, 2);
    const auto p = frf(plant, grid);
    const std::vector<SisoFrf> k{frf_siso(random_first_order(rng, 3.0), grid),
                                 frf_siso(random_first_order(rng, 3.0), grid)};
    const auto g0 = equivalent_plant(p, k, 0);
    const auto g1 = equivalent_plant(p, k, 1);
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const auto& m = p.values[f];
      const auto e = static_cast<Eigen::Index>(f);
      const cdouble r0 = m(0, 0) - m(0, 1) * k[1].values(e) * m(1, 0) / (1.0 + m(1, 1) * k[1].values(e));
      const cdouble r1 = m(1, 1) - m(1, 0) * k[0].values(e) * m(0, 1) / (1.0 + m(0, 0) * k[0].values(e));
      EXPECT_LE(std::abs(g0.values(e) - r0), 1e-12 * std::abs(r0));
      EXPECT_LE(std::abs(g1.values(e) - r1), 1e-12 * std::abs(r1));
    }
  }
}

TEST(EquivalentPlant, OpenLoopsGiveTheDiagonalEntry) {
  std::mt19937 rng(3);
  const auto grid = FrequencyGrid::logspace(1.0, 100.0, 20);
  const auto p = frf(random_stable_system(rng, 6, 3, 3), grid);
  const std::vector<SisoFrf> open(3, SisoFrf::constant(grid, 0.0));
  for (int i = 0; i < 3; ++i)
    EXPECT_TRUE(equivalent_plant(p, open, i).values.isApprox(p.entry(i, i).values, 0.0));
}

TEST(EquivalentPlant, SequentialOrderMatters) {
  std::mt19937 rng(5);
  const auto grid = FrequencyGrid::logspace(1.0, 100.0, 30);
  const auto p = frf(random_stable_system(rng, 6, 2, 2), grid);
  const std::vector<SisoFrf> k{frf_siso(random_first_order(rng, 2.0), grid),
                               frf_siso(random_first_order(rng, 2.0), grid)};
  const auto a = sequential_equivalent_plants(p, k, {0, 1});
  const auto b = sequential_equivalent_plants(p, k, {1, 0});
  EXPECT_TRUE(a[0].values.isApprox(p.entry(0, 0).values, 0.0));
  EXPECT_TRUE(b[1].values.isApprox(p.entry(1, 1).values, 0.0));
  EXPECT_THROW(sequential_equivalent_plants(p, k, {0, 0}), ConfigError);
}

TEST(DeterminantIdentity, HoldsForEveryClosingOrder) {
  std::mt19937 rng(11);
  const auto grid = FrequencyGrid::logspace(0.1, 1000.0, 200);
  const auto plant = random_stable_system(rng, 7, 3, 3);
  const auto p = frf(plant, grid);
  std::vector<SisoFrf> k;
  for (int i = 0; i < 3; ++i) k.push_back(frf_siso(random_first_order(rng, 1.0), grid));
  std::vector<int> order{0, 1, 2};
  do {
    EXPECT_LE(det_identity_residual(p, k, order), 1e-8);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(DeterminantIdentity, RandomStabilizedSystems) {
  const auto grid = FrequencyGrid::logspace(0.01, 1000.0, 200);
  EXPECT_LE(testing::worst_det_identity(2024, 20, grid), 1e-8);
}

TEST(Nyquist, IntegratorLoops) {
  const auto grid = FrequencyGrid::logspace(1e-4, 1e4, 800);
  SisoFrf l;
  l.grid = grid;
  l.values.resize(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t f = 0; f < grid.size(); ++f)
    l.values(static_cast<Eigen::Index>(f)) = 10.0 / cdouble(0.0, grid.omega(f));
  EXPECT_TRUE(nyquist_stable(l, 0, 1).stable);

  SisoFrf neg = l;
  neg.values = -neg.values;
  EXPECT_FALSE(nyquist_stable(neg, 0, 1).stable);

  // -k/s^2 closes to s^2 - k with one right half-plane root.
  SisoFrf dbl = l;
  for (std::size_t f = 0; f < grid.size(); ++f)
    dbl.values(static_cast<Eigen::Index>(f)) = 10.0 / (grid.omega(f) * grid.omega(f));
  EXPECT_FALSE(nyquist_stable(dbl, 0, 2).stable);
}

TEST(Nyquist, DoubleIntegratorWithLeadIsStable) {
  Cascade c = Cascade::lti({Gain{1.0}, Lead{10.0, 3.0}});
  StateSpace plant;
  plant.a = Eigen::MatrixXd{{0.0, 1.0}, {0.0, 0.0}};
  plant.b = Eigen::MatrixXd{{0.0}, {1.0}};
  plant.c = Eigen::MatrixXd{{1.0, 0.0}};
  plant.d = Eigen::MatrixXd::Zero(1, 1);
  const auto grid = FrequencyGrid::logspace(1e-3, 1e5, 2000);
  const double w = 2.0 * std::numbers::pi * 10.0;
  const StateSpace k = series(realize(FilterSpec{Gain{w * w / 3.0}}), realize(c));
  const auto l = frf_siso(series(k, plant), grid);
  EXPECT_TRUE(nyquist_stable(l, 0, 2).stable);
  EXPECT_LT(closed_loop_max_real(plant, {k}), 0.0);
  const auto m = margins_and_bandwidth(l);
  ASSERT_TRUE(m.crossover_hz.has_value());
  EXPECT_NEAR(*m.crossover_hz, 10.0, 0.05);
  EXPECT_NEAR(m.phase_margin_deg, 53.13, 0.1);
}

TEST(Nyquist, CoarseGridIsReported) {
  const auto grid = FrequencyGrid::logspace(1.0, 1000.0, 6);
  StateSpace res;
  const double w = 2.0 * std::numbers::pi * 30.0;
  res.a = Eigen::MatrixXd{{0.0, 1.0}, {-w * w, -0.002 * w}};
  res.b = Eigen::MatrixXd{{0.0}, {w * w}};
  res.c = Eigen::MatrixXd{{5.0, 0.0}};
  res.d = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_THROW(nyquist_stable(frf_siso(res, grid)), GridDensityError);
}

TEST(Nyquist, AgreesWithEigenvalueOracleOnRandomLoops) {
  const auto cv = testing::cross_validate_random_loops(99, 100);
  EXPECT_EQ(cv.agree, cv.loops);
  EXPECT_GE(cv.stable, 15);
  EXPECT_GE(cv.unstable, 15);
}

TEST(Margins, FortyFiveDegreesBoundsTheSensitivityPeak) {
  const auto grid = FrequencyGrid::logspace(1.0, 1000.0, 4001);
  SisoFrf l;
  l.grid = grid;
  l.values.resize(static_cast<Eigen::Index>(grid.size()));
  const cdouble rot = std::polar(1.0, -0.75 * std::numbers::pi);
  for (std::size_t f = 0; f < grid.size(); ++f)
    l.values(static_cast<Eigen::Index>(f)) = rot * 31.6227766 / grid.hz[f];
  const auto m = margins_and_bandwidth(l);
  ASSERT_TRUE(m.crossover_hz.has_value());
  EXPECT_NEAR(*m.crossover_hz, 31.6227766, 1e-3);
  EXPECT_NEAR(m.phase_margin_deg, 45.0, 1e-9);
  // |1 + L| at crossover is 2 sin(PM / 2); the closest approach along the -135 degree ray is sin 45.
  EXPECT_GE(m.sensitivity_peak_db, -20.0 * std::log10(2.0 * std::sin(std::numbers::pi / 8.0)));
  EXPECT_GE(m.sensitivity_peak_db, 2.32);
  EXPECT_NEAR(m.sensitivity_peak_db, -20.0 * std::log10(std::sqrt(0.5)), 1e-4);
}

TEST(ClosedLoop, EmptyControllerStatesAndDimensionChecks) {
  std::mt19937 rng(1);
  const auto plant = random_stable_system(rng, 3, 1, 1);
  const StateSpace k = realize(FilterSpec{Gain{0.0}});
  EXPECT_NEAR(closed_loop_max_real(plant, {k}),
              plant.a.eigenvalues().real().maxCoeff(), 1e-10);
  EXPECT_THROW(closed_loop_max_real(plant, {k, k}), ConfigError);
}

TEST(FrfCsv, RoundTrip) {
  std::mt19937 rng(2);
  const auto grid = FrequencyGrid::logspace(1.0, 100.0, 17);
  const auto p = frf(random_stable_system(rng, 4, 2, 3), grid);
  std::stringstream ss;
  write_frf_csv(ss, p);
  const auto q = read_frf_csv(ss);
  ASSERT_EQ(q.rows(), 3);
  ASSERT_EQ(q.cols(), 2);
  ASSERT_EQ(q.grid.size(), grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    EXPECT_EQ(q.grid.hz[f], grid.hz[f]);
    EXPECT_TRUE(q.values[f].isApprox(p.values[f], 1e-15));
  }
}

}  // namespace
}  // namespace lpvslc
