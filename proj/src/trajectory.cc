#include "lpvslc/trajectory.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "lpvslc/errors.h"

namespace lpvslc {

namespace {

MotionState advance(const MotionState& s, double snap, double tau) {
  MotionState o;
  o.snap = snap;
  o.jerk = s.jerk + snap * tau;
  o.acc = s.acc + s.jerk * tau + snap * tau * tau / 2.0;
  o.vel = s.vel + s.acc * tau + s.jerk * tau * tau / 2.0 + snap * tau * tau * tau / 6.0;
  o.pos = s.pos + s.vel * tau + s.acc * tau * tau / 2.0 + s.jerk * tau * tau * tau / 6.0 +
          snap * tau * tau * tau * tau / 24.0;
  return o;
}

double round_up(double t, double dt) {
  if (t <= 0.0) return 0.0;
  return std::ceil(t / dt - 1e-9) * dt;
}

// Smallest t >= 0 with 2 J (ts + t)(2 ts + t)^2 = d (monotone in t).
double jerk_time_for_distance(double d, double jerk, double ts) {
  auto dist = [&](double t) { return 2.0 * jerk * (ts + t) * (2.0 * ts + t) * (2.0 * ts + t); };
  if (dist(0.0) >= d) return 0.0;
  double lo = 0.0, hi = std::max(ts, 1e-12);
  while (dist(hi) < d) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (dist(mid) < d ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

void MotionBounds::validate() const {
  if (!(v_max > 0.0) || !(a_max > 0.0) || !(j_max > 0.0) || !(s_max > 0.0) ||
      !std::isfinite(v_max) || !std::isfinite(a_max) || !std::isfinite(j_max) ||
      !std::isfinite(s_max))
    throw ConfigError("motion bounds must be finite and strictly positive");
}

double TrajectoryProfile::duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

double TrajectoryProfile::displacement() const {
  MotionState s = initial;
  for (const auto& seg : segments) s = advance(s, seg.snap, seg.duration);
  return s.pos - initial.pos;
}

TrajectoryProfile plan(double displacement, const MotionBounds& b, double sample_rate) {
  b.validate();
  if (!std::isfinite(displacement)) throw ConfigError("displacement must be finite");
  if (sample_rate < 0.0 || !std::isfinite(sample_rate)) throw ConfigError("sample rate must be >= 0");
  TrajectoryProfile prof;
  prof.sample_rate = sample_rate;
  prof.distance = displacement;
  if (displacement == 0.0) return prof;

  const double d = std::abs(displacement);
  const double sign = displacement > 0.0 ? 1.0 : -1.0;
  const double s = b.s_max;

  double ts = std::min({std::pow(d / (8.0 * s), 0.25), std::cbrt(b.v_max / (2.0 * s)),
                        std::sqrt(b.a_max / s), b.j_max / s});
  const double jerk = s * ts;
  const double tj_a = b.a_max / jerk - ts;
  const double tj_v = 0.5 * (-3.0 * ts + std::sqrt(ts * ts + 4.0 * b.v_max / jerk));
  const double tj_d = jerk_time_for_distance(d, jerk, ts);
  double tj = std::max(0.0, std::min({tj_a, tj_v, tj_d}));
  const double acc = jerk * (ts + tj);
  const double c = 2.0 * ts + tj;
  const double ta_v = b.v_max / acc - c;
  const double ta_d = 0.5 * (-3.0 * c + std::sqrt(c * c + 4.0 * d / acc));
  double ta = std::max(0.0, std::min(ta_v, ta_d));
  const double vel = acc * (c + ta);
  double tv = std::max(0.0, d / vel - (4.0 * ts + 2.0 * tj + ta));

  double snap = s;
  if (sample_rate > 0.0) {
    const double dt = 1.0 / sample_rate;
    ts = round_up(ts, dt);
    tj = round_up(tj, dt);
    ta = round_up(ta, dt);
    tv = round_up(tv, dt);
    snap = d / (ts * (ts + tj) * (2.0 * ts + tj + ta) * (4.0 * ts + 2.0 * tj + ta + tv));
  } else {
    snap = d / (ts * (ts + tj) * (2.0 * ts + tj + ta) * (4.0 * ts + 2.0 * tj + ta + tv));
  }
  snap = std::min(snap, s);
  prof.t_snap = ts;
  prof.t_jerk = tj;
  prof.t_acc = ta;
  prof.t_vel = tv;

  const double sv = sign * snap;
  const SnapSegment pattern[] = {
      {ts, sv}, {tj, 0.0}, {ts, -sv}, {ta, 0.0}, {ts, -sv}, {tj, 0.0}, {ts, sv}, {tv, 0.0},
      {ts, -sv}, {tj, 0.0}, {ts, sv}, {ta, 0.0}, {ts, sv}, {tj, 0.0}, {ts, -sv}};
  for (const auto& seg : pattern)
    if (seg.duration > 0.0) prof.segments.push_back(seg);
  return prof;
}

MotionState sample(const TrajectoryProfile& profile, double t) {
  MotionState s = profile.initial;
  s.snap = 0.0;
  if (t < 0.0) return s;
  double start = 0.0;
  for (std::size_t k = 0; k < profile.segments.size(); ++k) {
    const auto& seg = profile.segments[k];
    if (t < start + seg.duration) return advance(s, seg.snap, t - start);
    s = advance(s, seg.snap, seg.duration);
    start += seg.duration;
  }
  MotionState end;
  end.pos = profile.initial.pos + profile.distance;
  return end;
}

Eigen::MatrixXd mass_feedforward(const Eigen::MatrixXd& acc, const Eigen::MatrixXd& rigid_mass) {
  if (acc.cols() != rigid_mass.rows() || rigid_mass.rows() != rigid_mass.cols())
    throw ConfigError("feedforward: acceleration columns must match the mass matrix");
  return acc * rigid_mass.transpose();
}

std::vector<double> mass_feedforward(const TrajectoryProfile& profile, double mass,
                                     const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(mass * sample(profile, t).acc);
  return out;
}

void write_profile_csv(std::ostream& os, const TrajectoryProfile& profile, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ConfigError("CSV export needs a positive sample rate");
  const auto n = static_cast<long>(std::llround(profile.duration() * sample_rate));
  os << "t,pos,vel,acc,jerk,snap\n" << std::setprecision(17);
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / sample_rate;
    const auto s = sample(profile, t);
    os << t << ',' << s.pos << ',' << s.vel << ',' << s.acc << ',' << s.jerk << ',' << s.snap << '\n';
  }
}

}  // namespace lpvslc
