#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpvslc/plant.h"

namespace lpvslc {

// Affine map q -> (q - center) / half_span applied before monomial evaluation.
struct Normalization {
  double x_center = 0.0;
  double x_half = 1.0;
  double y_center = 0.0;
  double y_half = 1.0;

  static Normalization identity() { return {}; }
  static Normalization from_box(const Box& box);
  SchedulingPoint apply(const SchedulingPoint& p) const;
};

// chi(p) = [1 .. qx^(i-1)] kron [1 .. qy^(j-1)], entry v*j + w = qx^v qy^w.
Eigen::VectorXd chi(const SchedulingPoint& p, int i, int j);

struct CoefficientSurface {
  int order_i = 1;
  int order_j = 1;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  Normalization norm;
  std::string units;

  static CoefficientSurface constant(double value, const std::string& units = "");
  void validate() const;
};

double eval_surface(const CoefficientSurface& s, const SchedulingPoint& p);

struct DesignSample {
  SchedulingPoint p;
  double value = 0.0;
  std::string units;
};

struct FrozenDesignSet {
  std::vector<DesignSample> samples;
};

struct FitReport {
  std::vector<double> residuals;  // A theta - Y per design point
  double residual_norm_sq = 0.0;
  int rank = 0;
  double condition = 1.0;  // ratio of extreme |R| diagonal entries of the pivoted QR
  bool rank_deficient = false;
};

struct SurfaceFit {
  CoefficientSurface surface;
  FitReport report;
};

// Least-squares fit of theta from frozen designs; minimum-norm solution (and a
// logged warning) when the regressor matrix is rank deficient.
SurfaceFit fit_surface(const FrozenDesignSet& designs, int i, int j,
                       const Normalization& norm = Normalization::identity());

}  // namespace lpvslc
