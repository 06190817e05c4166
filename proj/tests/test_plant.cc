#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lpvslc/errors.h"
#include "lpvslc/freqresp.h"
#include "lpvslc/plant.h"

namespace lpvslc {
namespace {

cdouble modal_sum(const ModalPlantModel& model, const SchedulingPoint& p, double w, int out,
                  int in) {
  const auto maps = mode_shape_eval(model, p);
  const Eigen::VectorXd m = model.mass_diagonal();
  const Eigen::VectorXd d = model.damping_diagonal();
  const Eigen::VectorXd k = model.stiffness_diagonal();
  cdouble sum = 0.0;
  for (int q = 0; q < model.modes(); ++q)
    sum += maps.phi_s(out, q) * maps.phi_a(q, in) / cdouble(k(q) - m(q) * w * w, w * d(q));
  return sum;
}

TEST(Plant, BenchmarkIsValid) {
  const auto model = benchmark_plant();
  EXPECT_NO_THROW(model.validate());
  EXPECT_EQ(model.axes(), 3);
  EXPECT_EQ(model.modes(), 6);
}

TEST(Plant, RealizationMatchesModalSum) {
  const auto model = benchmark_plant();
  const auto grid = FrequencyGrid::logspace(1.0, 5000.0, 300);
  for (const auto& p : model.workspace.grid(3, 3)) {
    const auto ss = frozen_realization(model, p);
    const auto h = frf(ss, grid);
    for (std::size_t f = 0; f < grid.size(); ++f)
      for (int o = 0; o < ss.outputs(); ++o)
        for (int i = 0; i < ss.inputs(); ++i) {
          const cdouble ref = modal_sum(model, p, grid.omega(f), o, i);
          EXPECT_LE(std::abs(h.values[f](o, i) - ref), 1e-9 * std::abs(ref) + 1e-300);
        }
  }
}

TEST(Plant, CompanionStructure) {
  const auto model = benchmark_plant();
  const auto ss = frozen_realization(model, model.workspace.center());
  const int n = model.modes();
  ASSERT_EQ(ss.order(), 2 * n);
  EXPECT_TRUE(ss.a.topLeftCorner(n, n).isZero(0.0));
  EXPECT_TRUE(ss.a.topRightCorner(n, n).isIdentity(0.0));
  const Eigen::VectorXd m = model.mass_diagonal();
  const Eigen::VectorXd k = model.stiffness_diagonal();
  for (int q = 0; q < n; ++q) EXPECT_DOUBLE_EQ(ss.a(n + q, q), -k(q) / m(q));
  EXPECT_TRUE(ss.b.topRows(n).isZero(0.0));
  EXPECT_TRUE(ss.c.rightCols(n).isZero(0.0));
  EXPECT_TRUE(ss.d.isZero(0.0));
}

TEST(Plant, FirstFlexibleModeEigenvalue) {
  const auto model = benchmark_plant();
  const auto ss = frozen_realization(model, model.workspace.center());
  Eigen::EigenSolver<Eigen::MatrixXd> es(ss.a, false);
  const double target = 2.0 * std::numbers::pi * 226.5;
  double best = 1e300;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    best = std::min(best, std::abs(std::abs(es.eigenvalues()(i)) - target));
  EXPECT_LT(best, 1e-6 * target);
}

TEST(Plant, RigidRowsDoNotDependOnPosition) {
  const auto model = benchmark_plant();
  const auto ref = mode_shape_eval(model, model.workspace.center());
  for (const auto& p : model.workspace.grid(4, 4)) {
    const auto maps = mode_shape_eval(model, p);
    EXPECT_TRUE(maps.phi_a.topRows(model.axes()).isApprox(ref.phi_a.topRows(model.axes()), 0.0));
    EXPECT_TRUE(
        maps.phi_s.leftCols(model.axes()).isApprox(ref.phi_s.leftCols(model.axes()), 0.0));
  }
}

TEST(Plant, FlexibleCouplingVariesWithPosition) {
  const auto model = benchmark_plant();
  const auto corners = model.workspace.grid(2, 2);
  const auto a = mode_shape_eval(model, corners.front());
  const auto b = mode_shape_eval(model, corners.back());
  EXPECT_GT((a.phi_a.bottomRows(3) - b.phi_a.bottomRows(3)).norm(), 1e-3);
}

TEST(Plant, PositionOutsideWorkspaceThrows) {
  const auto model = benchmark_plant();
  SchedulingPoint p{model.workspace.x_max + 0.01, model.workspace.center().qy};
  EXPECT_THROW(mode_shape_eval(model, p), DomainError);
  EXPECT_THROW(frozen_realization(model, p), DomainError);
}

TEST(Plant, InvalidParametersThrow) {
  auto model = benchmark_plant();
  model.flexible[0].damping = -0.01;
  EXPECT_THROW(model.validate(), ConfigError);

  model = benchmark_plant();
  model.rigid[1].mass = 0.0;
  EXPECT_THROW(model.validate(), ConfigError);

  model = benchmark_plant();
  model.sensors.pop_back();
  EXPECT_THROW(model.validate(), ConfigError);

  model = benchmark_plant();
  model.workspace.x_max = model.workspace.x_min;
  EXPECT_THROW(model.validate(), ConfigError);
}

TEST(Plant, RankLossDetected) {
  auto model = benchmark_plant();
  for (auto& s : model.sensors) s.y = 0.0;
  for (auto& s : model.sensors) s.x = 0.0;
  EXPECT_THROW(model.validate(), ConfigError);
}

TEST(Plant, RigidPlantIsDoubleIntegrator) {
  const auto model = rigid_benchmark_plant();
  EXPECT_EQ(model.modes(), 3);
  const auto ss = frozen_realization(model, model.workspace.center());
  const auto grid = FrequencyGrid::logspace(1.0, 1000.0, 50);
  const auto h = frf(ss, grid);
  for (std::size_t f = 0; f + 1 < grid.size(); ++f) {
    const double r = std::abs(h.values[f](0, 0)) / std::abs(h.values[f + 1](0, 0));
    const double w = grid.omega(f + 1) / grid.omega(f);
    EXPECT_NEAR(r, w * w, 1e-9 * w * w);
  }
}

}  // namespace
}  // namespace lpvslc
