#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "lpvslc/errors.h"
#include "lpvslc/filters.h"
#include "test_support.h"

namespace lpvslc {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Notch, RealizationMatchesTransferFunction) {
  EXPECT_LE(testing::worst_notch_error(17, 200), 1e-10);
}

TEST(Notch, DcGainIsOneAndHighFrequencyRatio) {
  const Notch n{300.0, 360.0, 0.05, 0.4};
  const auto ss = realize(FilterSpec{n});
  EXPECT_NEAR(std::abs(frf_at(ss, 0.0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(frf_at(ss, 2 * kPi * 1e7)), 1.44, 1e-6);
  const double at_f1 = 360.0 * 360.0 * 2.0 * 0.05 /
                      std::abs(cdouble(360.0 * 360.0 - 300.0 * 300.0, 2.0 * 0.4 * 360.0 * 300.0));
  EXPECT_NEAR(std::abs(frf_at(ss, 2 * kPi * 300.0)), at_f1, 1e-12);
}

TEST(Notch, InvalidParametersThrow) {
  EXPECT_THROW(realize(FilterSpec{Notch{0.0, 100.0, 0.1, 0.5}}), ConfigError);
  EXPECT_THROW(realize(FilterSpec{Notch{100.0, 100.0, -0.1, 0.5}}), ConfigError);
  EXPECT_THROW(realize(FilterSpec{Notch{100.0, 100.0, 0.1, 0.0}}), ConfigError);
}

TEST(Lead, PhaseAndGainAsymptotes) {
  const Lead lead{50.0, 3.0};
  const auto ss = realize(FilterSpec{lead});
  const cdouble at_bw = frf_at(ss, 2 * kPi * 50.0);
  EXPECT_NEAR(std::arg(at_bw) * 180.0 / kPi, 53.130102354, 0.05);
  EXPECT_NEAR(std::abs(at_bw), 3.0, 1e-12);
  EXPECT_NEAR(std::abs(frf_at(ss, 0.0)), 1.0, 1e-10);
  EXPECT_NEAR(std::abs(frf_at(ss, 2 * kPi * 1e9)), 9.0, 1e-6);

  const auto grid = FrequencyGrid::logspace(5.0, 500.0, 4001);
  const auto h = frf_siso(ss, grid);
  Eigen::Index k = 0;
  h.values.arg().maxCoeff(&k);
  EXPECT_NEAR(grid.hz[static_cast<std::size_t>(k)], 50.0, 0.1);
}

TEST(Integrator, PureAndPiForms) {
  const auto pure = realize(FilterSpec{Integrator{}});
  EXPECT_NEAR(std::abs(frf_at(pure, 2.0) - cdouble(0.0, -0.5)), 0.0, 1e-15);
  const auto pi = realize(FilterSpec{Integrator{20.0}});
  const double w = 2 * kPi * 20.0;
  const cdouble ref = cdouble(w, w) / cdouble(0.0, w);
  EXPECT_NEAR(std::abs(frf_at(pi, w) - ref), 0.0, 1e-12);
  EXPECT_THROW(realize(FilterSpec{Integrator{-1.0}}), ConfigError);
}

TEST(Cascade, RealizationMatchesProductOfElements) {
  const Cascade c = Cascade::lti({Gain{2e5}, Integrator{30.0}, Lead{150.0, 3.0},
                                  Notch{226.0, 260.0, 0.1, 0.5}, Notch{480.0, 480.0, 0.02, 0.3}});
  EXPECT_EQ(integrator_count(c), 1);
  const auto grid = FrequencyGrid::logspace(1.0, 5000.0, 300);
  const auto direct = cascade_frf(c, std::nullopt, grid);
  const auto ss = frf_siso(realize(c), grid);
  EXPECT_LE(testing::max_rel_error(ss.values, direct.values), 1e-9);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    cdouble prod = 1.0;
    for (const auto& e : c.elements) prod *= element_response(e, std::nullopt, grid.omega(k));
    EXPECT_LE(std::abs(direct.values(static_cast<Eigen::Index>(k)) - prod), 1e-12 * std::abs(prod));
  }
}

TEST(Cascade, PartitionIsEnforced) {
  const LpvNotch ln{CoefficientSurface::constant(0.1), CoefficientSurface::constant(0.5),
                    CoefficientSurface::constant(200.0), CoefficientSurface::constant(220.0)};
  EXPECT_THROW(Cascade::lti({Gain{1.0}, ln}), ConfigError);
  EXPECT_THROW(Cascade::partitioned({Gain{1.0}}, {Lead{}}), ConfigError);
  const auto c = Cascade::partitioned({Gain{1.0}}, {ln});
  EXPECT_TRUE(c.scheduled());
  EXPECT_THROW(realize(c), ConfigError);
  EXPECT_NO_THROW(realize(c, SchedulingPoint{0.1, 0.1}));
}

TEST(LpvNotch, FrozenAtPointEqualsLtiNotch) {
  CoefficientSurface f1;
  f1.order_i = 2;
  f1.order_j = 2;
  f1.theta = Eigen::Vector4d(220.0, 10.0, -30.0, 5.0);
  const LpvNotch ln{CoefficientSurface::constant(0.05), CoefficientSurface::constant(0.4), f1,
                    CoefficientSurface::constant(250.0)};
  const SchedulingPoint p{0.3, -0.7};
  const Notch frozen = evaluate_lpv_notch(ln, p);
  EXPECT_DOUBLE_EQ(frozen.f1, 220.0 - 0.7 * 10.0 + 0.3 * -30.0 + 0.3 * -0.7 * 5.0);
  const auto grid = FrequencyGrid::logspace(10.0, 2000.0, 100);
  EXPECT_LE(testing::max_rel_error(frf_siso(realize(FilterSpec{ln}, p), grid).values,
                                   notch_frf(frozen, grid)),
            1e-10);
}

TEST(LpvNotch, FrequenciesAreClampedAndDampingChecked) {
  const LpvNotch ln{CoefficientSurface::constant(0.05), CoefficientSurface::constant(0.4),
                    CoefficientSurface::constant(9000.0), CoefficientSurface::constant(0.1)};
  const auto n = evaluate_lpv_notch(ln, {}, NotchLimits::for_step(1e-4));
  EXPECT_DOUBLE_EQ(n.f1, 4500.0);
  EXPECT_DOUBLE_EQ(n.f2, 1.0);
  const LpvNotch bad{CoefficientSurface::constant(0.05), CoefficientSurface::constant(-0.1),
                     CoefficientSurface::constant(200.0), CoefficientSurface::constant(200.0)};
  EXPECT_THROW(evaluate_lpv_notch(bad, {}), DomainError);
}

TEST(LpvNotch, StepMatchesFrozenNotchStep) {
  const Notch n{200.0, 230.0, 0.1, 0.5};
  const LpvNotch ln{CoefficientSurface::constant(n.beta1), CoefficientSurface::constant(n.beta2),
                    CoefficientSurface::constant(n.f1), CoefficientSurface::constant(n.f2)};
  LpvFilterState a, b;
  for (int k = 0; k < 200; ++k) {
    const double u = std::sin(0.01 * k);
    const auto sa = step_lpv_filter(FilterSpec{n}, a, u, {}, 1e-4);
    const auto sb = step_lpv_filter(FilterSpec{ln}, b, u, {}, 1e-4);
    EXPECT_EQ(sa.y, sb.y);
    a = sa.state;
    b = sb.state;
  }
}

TEST(LpvNotch, StepIsFourthOrderAccurate) {
  const Notch n{200.0, 230.0, 0.1, 0.5};
  const auto ss = realize(FilterSpec{n});
  const double horizon = 0.01;
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(3, 3);
  aug.topLeftCorner(2, 2) = ss.a * horizon;
  aug.topRightCorner(2, 1) = ss.b * horizon;
  const Eigen::Vector2d exact = aug.exp().topRightCorner(2, 1);

  auto run = [&](int steps) {
    LpvFilterState s;
    for (int k = 0; k < steps; ++k) s = step_lpv_filter(FilterSpec{n}, s, 1.0, {}, horizon / steps).state;
    return (s.x - exact).norm() / exact.norm();
  };
  const double e1 = run(100), e2 = run(200);
  EXPECT_LT(e1, 1e-4);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3);
}

}  // namespace
}  // namespace lpvslc
