#include "lpvslc/scheduling.h"

#include <cmath>

#include <spdlog/spdlog.h>

#include "lpvslc/errors.h"
#include "lpvslc/log.h"

namespace lpvslc {

Normalization Normalization::from_box(const Box& box) {
  box.validate("normalization box");
  return {0.5 * (box.x_min + box.x_max), 0.5 * (box.x_max - box.x_min),
          0.5 * (box.y_min + box.y_max), 0.5 * (box.y_max - box.y_min)};
}

SchedulingPoint Normalization::apply(const SchedulingPoint& p) const {
  return {(p.qx - x_center) / x_half, (p.qy - y_center) / y_half};
}

Eigen::VectorXd chi(const SchedulingPoint& p, int i, int j) {
  if (i < 1 || j < 1) throw ConfigError("monomial orders must be >= 1");
  Eigen::VectorXd out(i * j);
  double xv = 1.0;
  for (int v = 0; v < i; ++v) {
    double yw = 1.0;
    for (int w = 0; w < j; ++w) {
      out(v * j + w) = xv * yw;
      yw *= p.qy;
    }
    xv *= p.qx;
  }
  return out;
}

CoefficientSurface CoefficientSurface::constant(double value, const std::string& units) {
  CoefficientSurface s;
  s.theta = Eigen::VectorXd::Constant(1, value);
  s.units = units;
  return s;
}

void CoefficientSurface::validate() const {
  if (order_i < 1 || order_j < 1) throw ConfigError("surface orders must be >= 1");
  if (theta.size() != order_i * order_j)
    throw ConfigError("surface theta length must equal order_i * order_j");
  if (!(norm.x_half != 0.0) || !(norm.y_half != 0.0))
    throw ConfigError("surface normalization has zero span");
}

double eval_surface(const CoefficientSurface& s, const SchedulingPoint& p) {
  s.validate();
  return chi(s.norm.apply(p), s.order_i, s.order_j).dot(s.theta);
}

SurfaceFit fit_surface(const FrozenDesignSet& designs, int i, int j, const Normalization& norm) {
  const auto& smp = designs.samples;
  if (smp.empty()) throw ConfigError("fit needs at least one frozen design");
  if (i < 1 || j < 1) throw ConfigError("monomial orders must be >= 1");
  for (const auto& s : smp)
    if (s.units != smp.front().units)
      throw ConfigError("units mismatch across frozen designs ('" + smp.front().units +
                        "' vs '" + s.units + "')");
  for (std::size_t a = 0; a < smp.size(); ++a)
    for (std::size_t b = a + 1; b < smp.size(); ++b)
      if (smp[a].p == smp[b].p) throw ConfigError("duplicate design point in fit");

  const auto n = static_cast<Eigen::Index>(smp.size());
  Eigen::MatrixXd a(n, i * j);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    a.row(r) = chi(norm.apply(smp[static_cast<std::size_t>(r)].p), i, j).transpose();
    y(r) = smp[static_cast<std::size_t>(r)].value;
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  SurfaceFit out;
  out.surface.order_i = i;
  out.surface.order_j = j;
  out.surface.norm = norm;
  out.surface.units = smp.front().units;
  out.surface.theta = cod.solve(y);

  auto& rep = out.report;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  rep.rank = static_cast<int>(qr.rank());
  rep.rank_deficient = rep.rank < i * j;
  const Eigen::VectorXd rdiag = qr.matrixR().diagonal().cwiseAbs();
  if (rep.rank_deficient || rdiag.size() == 0 || rdiag.minCoeff() == 0.0)
    rep.condition = INFINITY;
  else
    rep.condition = rdiag.maxCoeff() / rdiag.minCoeff();
  if (rep.rank_deficient)
    log().warn("surface fit is rank deficient (rank {} < {}); using the minimum-norm solution",
               rep.rank, i * j);

  const Eigen::VectorXd res = a * out.surface.theta - y;
  rep.residuals.assign(res.data(), res.data() + res.size());
  rep.residual_norm_sq = res.squaredNorm();
  return out;
}

}  // namespace lpvslc
