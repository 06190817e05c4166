#include "lpvslc/design.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "lpvslc/errors.h"
#include "lpvslc/log.h"

namespace lpvslc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kRigidOriginPoles = 2;

template <class F>
void parallel_for(int n, int jobs, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string point_text(const SchedulingPoint& p) {
  std::ostringstream os;
  os << "(" << p.qx << ", " << p.qy << ")";
  return os.str();
}

double min_abs_sq(const Eigen::ArrayXcd& l) { return (1.0 + l).abs2().minCoeff(); }

double bound_abs_sq(double bound_db) {
  const double s = std::pow(10.0, -bound_db / 20.0);
  return s * s;
}

bool loop_stable(const Eigen::ArrayXcd& l, const FrequencyGrid& grid, int origin_poles) {
  try {
    return nyquist_encirclements(l, grid, origin_poles) == 0;
  } catch (const NumericalError& e) {
    log().debug("loop treated as unstable: {}", e.what());
    return false;
  }
}

struct Candidate {
  double skew;
  double beta2;
  double ratio;
};

std::vector<Candidate> notch_family(const NotchSearch& s) {
  std::vector<Candidate> fam;
  for (double sk : s.skews)
    for (double b2 : s.beta2)
      for (double r : s.beta1_ratio) fam.push_back({sk, b2, r});
  return fam;
}

Notch make_notch(double f, const Candidate& c) { return {f, f * c.skew, c.ratio * c.beta2, c.beta2}; }

Notch identity_notch(double f) { return {f, f, 1.0, 1.0}; }

// Per-loop data fixed during one bisection.
struct LoopContext {
  int loop = 0;
  double mass = 1.0;
  std::vector<ResonanceSlot> slots;
  std::vector<SisoFrf> g_design;
  std::vector<SisoFrf> g_verify;
  std::vector<std::vector<Eigen::ArrayXcd>> lti_family;  // [slot][candidate]
};

struct Attempt {
  bool ok = false;
  Cascade cascade;
  std::string reason;
  std::vector<ScheduledNotchDesign> local;
};

Cascade gamma_for(double f_bw, double mass, const DesignSpec& spec) {
  const Integrator integ{f_bw / spec.integrator_ratio};
  const Lead lead{f_bw, spec.alpha};
  const Cascade partial = Cascade::lti({integ, lead});
  FrequencyGrid at;
  at.hz = {f_bw};
  const double w = 2.0 * kPi * f_bw;
  const SisoFrf line = SisoFrf::constant(at, -1.0 / (mass * w * w));
  return Cascade::lti({tune_gain(line, partial, f_bw), integ, lead});
}

int origin_poles_of(const Cascade& c) { return kRigidOriginPoles + integrator_count(c); }

// Coordinate-descent notch selection minimizing the worst sensitivity peak
// over `bases`, subject to Nyquist stability at every base.
std::vector<Notch> select_notches(const std::vector<Eigen::ArrayXcd>& bases,
                                  const std::vector<double>& slot_freq,
                                  const std::vector<std::vector<Eigen::ArrayXcd>>* precomputed,
                                  const std::vector<Candidate>& fam, const DesignSpec& spec,
                                  int origin_poles) {
  const auto& grid = spec.grid;
  const std::size_t ns = slot_freq.size();
  const auto nf = static_cast<Eigen::Index>(grid.size());
  std::vector<Notch> chosen(ns);
  std::vector<Eigen::ArrayXcd> frfs(ns, Eigen::ArrayXcd::Ones(nf));
  for (std::size_t s = 0; s < ns; ++s) chosen[s] = identity_notch(slot_freq[s]);

  auto cand_frf = [&](std::size_t s, std::size_t c) -> Eigen::ArrayXcd {
    if (precomputed) return (*precomputed)[s][c];
    return notch_frf(make_notch(slot_freq[s], fam[c]), grid);
  };

  for (int sweep = 0; sweep < spec.notch.sweeps; ++sweep) {
    for (std::size_t s = 0; s < ns; ++s) {
      std::vector<Eigen::ArrayXcd> rest = bases;
      for (std::size_t o = 0; o < ns; ++o)
        if (o != s)
          for (auto& r : rest) r *= frfs[o];
      std::vector<double> worst(fam.size(), INFINITY);
      std::vector<Eigen::ArrayXcd> cache(fam.size());
      for (std::size_t c = 0; c < fam.size(); ++c) {
        cache[c] = cand_frf(s, c);
        double w = INFINITY;
        for (const auto& r : rest) w = std::min(w, min_abs_sq(r * cache[c]));
        worst[c] = w;
      }
      std::vector<std::size_t> idx(fam.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return worst[a] > worst[b]; });
      std::size_t pick = idx.front();
      for (std::size_t c : idx) {
        bool ok = true;
        for (const auto& r : rest)
          if (!loop_stable(r * cache[c], grid, origin_poles)) {
            ok = false;
            break;
          }
        if (ok) {
          pick = c;
          break;
        }
      }
      chosen[s] = make_notch(slot_freq[s], fam[pick]);
      frfs[s] = cache[pick];
    }
  }
  return chosen;
}

// Checks one loop on a set of equivalent plants; returns an empty string on success.
std::string check_loop_on(const std::vector<SisoFrf>& g, const std::vector<FrozenPlant>& plants,
                          const Cascade& c, const DesignSpec& spec) {
  const double bound = bound_abs_sq(spec.sensitivity_bound_db);
  const int origin = origin_poles_of(c);
  std::vector<std::string> fail(g.size());
  parallel_for(static_cast<int>(g.size()), spec.jobs, [&](int k) {
    const auto& p = plants[static_cast<std::size_t>(k)].p;
    Eigen::ArrayXcd l;
    try {
      l = g[static_cast<std::size_t>(k)].values * cascade_frf(c, p, spec.grid).values;
    } catch (const Error& e) {
      fail[static_cast<std::size_t>(k)] = std::string("controller invalid at ") + point_text(p) +
                                          ": " + e.what();
      return;
    }
    if (min_abs_sq(l) < bound)
      fail[static_cast<std::size_t>(k)] = "sensitivity bound violated at " + point_text(p);
    else if (!loop_stable(l, spec.grid, origin))
      fail[static_cast<std::size_t>(k)] = "Nyquist instability at " + point_text(p);
  });
  for (const auto& f : fail)
    if (!f.empty()) return f;
  return {};
}

class SlcDesigner {
 public:
  SlcDesigner(const ModalPlantModel& model, const DesignSpec& spec, bool lpv)
      : model_(model), spec_(spec), lpv_(lpv), family_(notch_family(spec.notch)) {
    spec_.validate(model.axes());
    model_.validate();
    const auto center = model.workspace.center();
    dec_ = rigid_body_decouple(model, center);
    design_pts_ = sample_plant(model, dec_, model.workspace.grid(spec.design_nx, spec.design_ny),
                               spec.grid, spec.jobs);
    verify_pts_ = sample_plant(model, dec_, model.workspace.grid(spec.verify_nx, spec.verify_ny),
                               spec.grid, spec.jobs);
    for (const auto& vp : verify_pts_) {
      const Decoupling d = rigid_body_decouple(model, vp.p);
      if (!d.tu.isApprox(dec_.tu, 1e-12) || !d.ty.isApprox(dec_.ty, 1e-12))
        throw ConfigError("rigid-body decoupling varies over the workspace at " + point_text(vp.p) +
                          "; only constant decoupling is supported");
    }
  }

  DesignResult run() {
    const int n = model_.axes();
    DesignResult res;
    auto& cs = res.controllers;
    cs.kind = lpv_ ? "lpv" : "lti";
    cs.dec = dec_;
    cs.loops.assign(static_cast<std::size_t>(n), Cascade::lti({}));
    cs.bandwidth_hz.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& l : spec_.loops) cs.names.push_back(l.name);
    res.loops.resize(static_cast<std::size_t>(n));

    std::vector<bool> closed(static_cast<std::size_t>(n), false);
    for (std::size_t t = 0; t < spec_.loop_order.size(); ++t) {
      const int loop = spec_.loop_order[t];
      const bool last = t + 1 == spec_.loop_order.size();
      const LoopSpec& ls = spec_.loops[static_cast<std::size_t>(loop)];
      LoopContext ctx = make_context(loop, cs, closed);
      const bool schedule = lpv_ && ls.scheduled;

      auto attempt = [&](double f_bw) {
        Attempt a = schedule ? try_lpv(ctx, f_bw) : try_lti(ctx, f_bw);
        if (a.ok && last) {
          ControllerSet trial = cs;
          trial.loops[static_cast<std::size_t>(loop)] = a.cascade;
          const auto rep = certify(verify_pts_, trial, spec_, false);
          if (!rep.passed) {
            a.ok = false;
            for (const auto& pv : rep.points)
              if (!pv.passed) {
                a.reason = "certification: " + pv.failure + " at " + point_text(pv.p);
                break;
              }
          }
        }
        log().debug("loop {} f_bw {:.3f} Hz: {}", ls.name, f_bw, a.ok ? "feasible" : a.reason);
        return a;
      };

      LoopDesignInfo& info = res.loops[static_cast<std::size_t>(loop)];
      info.name = ls.name;
      info.rigid_mass = ctx.mass;
      for (const auto& s : ctx.slots) info.slot_freq_hz.push_back(s.freq_hz);

      Attempt best = attempt(ls.bandwidth_cap_hz);
      double f_best = ls.bandwidth_cap_hz;
      if (best.ok) {
        info.limit = "cap";
      } else {
        const std::string cap_reason = best.reason;
        Attempt lo_att = attempt(ls.bandwidth_min_hz);
        if (!lo_att.ok)
          throw InfeasibleError("loop " + ls.name + " infeasible at minimum bandwidth " +
                                std::to_string(ls.bandwidth_min_hz) + " Hz: " + lo_att.reason);
        double lo = ls.bandwidth_min_hz;
        double hi = ls.bandwidth_cap_hz;
        best = lo_att;
        f_best = lo;
        std::string binding = cap_reason;
        for (int it = 0; it < spec_.bisection_iterations; ++it) {
          const double mid = 0.5 * (lo + hi);
          Attempt a = attempt(mid);
          if (a.ok) {
            lo = mid;
            best = std::move(a);
            f_best = mid;
          } else {
            hi = mid;
            binding = a.reason;
          }
        }
        info.limit = binding;
      }
      info.bandwidth_hz = f_best;
      log().info("loop {}: bandwidth {:.2f} Hz ({})", ls.name, f_best, info.limit);
      cs.loops[static_cast<std::size_t>(loop)] = best.cascade;
      cs.bandwidth_hz[static_cast<std::size_t>(loop)] = f_best;
      for (auto& l : best.local) res.local_designs.push_back(std::move(l));
      closed[static_cast<std::size_t>(loop)] = true;
    }
    res.certification = certify(verify_pts_, cs, spec_, true);
    return res;
  }

 private:
  std::vector<SisoFrf> sequential_g(const std::vector<FrozenPlant>& pts, const ControllerSet& cs,
                                    const std::vector<bool>& closed, int loop) const {
    std::vector<SisoFrf> out(pts.size());
    parallel_for(static_cast<int>(pts.size()), spec_.jobs, [&](int k) {
      const auto& fp = pts[static_cast<std::size_t>(k)];
      std::vector<SisoFrf> kf;
      for (int j = 0; j < model_.axes(); ++j) {
        if (closed[static_cast<std::size_t>(j)])
          kf.push_back(cascade_frf(cs.loops[static_cast<std::size_t>(j)], fp.p, spec_.grid));
        else
          kf.push_back(SisoFrf::constant(spec_.grid, 0.0));
      }
      out[static_cast<std::size_t>(k)] = equivalent_plant(fp.frf, kf, loop);
    });
    return out;
  }

  LoopContext make_context(int loop, const ControllerSet& cs, const std::vector<bool>& closed) {
    LoopContext ctx;
    ctx.loop = loop;
    ctx.g_design = sequential_g(design_pts_, cs, closed, loop);
    ctx.g_verify = sequential_g(verify_pts_, cs, closed, loop);
    std::vector<double> masses;
    for (const auto& g : ctx.g_design) masses.push_back(rigid_line_mass(g, spec_.notch.rigid_line_max_hz));
    std::sort(masses.begin(), masses.end());
    ctx.mass = masses[masses.size() / 2];
    ctx.slots = find_resonance_slots(ctx.g_design, ctx.mass, spec_.notch);
    const bool scheduled = lpv_ && spec_.loops[static_cast<std::size_t>(loop)].scheduled;
    if (!scheduled) {
      ctx.lti_family.resize(ctx.slots.size());
      for (std::size_t s = 0; s < ctx.slots.size(); ++s)
        for (const auto& c : family_)
          ctx.lti_family[s].push_back(notch_frf(make_notch(ctx.slots[s].freq_hz, c), spec_.grid));
    }
    return ctx;
  }

  Attempt try_lti(const LoopContext& ctx, double f_bw) const {
    Attempt a;
    const Cascade gamma = gamma_for(f_bw, ctx.mass, spec_);
    const Eigen::ArrayXcd gf = cascade_frf(gamma, std::nullopt, spec_.grid).values;
    std::vector<Eigen::ArrayXcd> bases;
    for (const auto& g : ctx.g_verify) bases.push_back(g.values * gf);
    std::vector<double> freqs;
    for (const auto& s : ctx.slots) freqs.push_back(s.freq_hz);
    const auto notches =
        select_notches(bases, freqs, &ctx.lti_family, family_, spec_, origin_poles_of(gamma));
    std::vector<FilterSpec> el = gamma.elements;
    for (const auto& nt : notches) el.push_back(nt);
    a.cascade = Cascade::lti(el);
    a.reason = check_loop_on(ctx.g_verify, verify_pts_, a.cascade, spec_);
    a.ok = a.reason.empty();
    return a;
  }

  Attempt try_lpv(const LoopContext& ctx, double f_bw) const {
    Attempt a;
    const Cascade gamma = gamma_for(f_bw, ctx.mass, spec_);
    const Eigen::ArrayXcd gf = cascade_frf(gamma, std::nullopt, spec_.grid).values;
    const int origin = origin_poles_of(gamma);
    const std::size_t ns = ctx.slots.size();
    const std::size_t nd = design_pts_.size();
    std::vector<std::vector<Notch>> local(nd);
    std::vector<std::string> fail(nd);
    parallel_for(static_cast<int>(nd), spec_.jobs, [&](int k) {
      const auto ku = static_cast<std::size_t>(k);
      std::vector<double> freqs;
      for (const auto& s : ctx.slots) freqs.push_back(s.local_freq_hz[ku]);
      const std::vector<Eigen::ArrayXcd> base{ctx.g_design[ku].values * gf};
      local[ku] = select_notches(base, freqs, nullptr, family_, spec_, origin);
      Eigen::ArrayXcd l = base.front();
      for (const auto& nt : local[ku]) l *= notch_frf(nt, spec_.grid);
      if (min_abs_sq(l) < bound_abs_sq(spec_.sensitivity_bound_db))
        fail[ku] = "local sensitivity bound violated at " + point_text(design_pts_[ku].p);
      else if (!loop_stable(l, spec_.grid, origin))
        fail[ku] = "local Nyquist instability at " + point_text(design_pts_[ku].p);
    });
    for (const auto& f : fail)
      if (!f.empty()) {
        a.reason = f;
        return a;
      }

    const Normalization norm = Normalization::from_box(model_.workspace);
    std::vector<FilterSpec> psi;
    for (std::size_t s = 0; s < ns; ++s) {
      ScheduledNotchDesign d;
      d.loop = ctx.loop;
      d.slot = static_cast<int>(s);
      for (std::size_t k = 0; k < nd; ++k) {
        const auto& p = design_pts_[k].p;
        const Notch& nt = local[k][s];
        d.beta1.samples.push_back({p, nt.beta1, ""});
        d.beta2.samples.push_back({p, nt.beta2, ""});
        d.f1.samples.push_back({p, nt.f1, "Hz"});
        d.f2.samples.push_back({p, nt.f2, "Hz"});
      }
      try {
        psi.push_back(fit_lpv_notch(d, spec_.surface_order_i, spec_.surface_order_j, norm,
                                    spec_.fit_tolerance));
      } catch (const Error& e) {
        a.reason = e.what();
        return a;
      }
      a.local.push_back(std::move(d));
    }
    a.cascade = Cascade::partitioned(gamma.elements, psi);
    a.reason = check_loop_on(ctx.g_verify, verify_pts_, a.cascade, spec_);
    a.ok = a.reason.empty();
    return a;
  }

  const ModalPlantModel& model_;
  DesignSpec spec_;
  bool lpv_;
  std::vector<Candidate> family_;
  Decoupling dec_;
  std::vector<FrozenPlant> design_pts_;
  std::vector<FrozenPlant> verify_pts_;
};

}  // namespace

Decoupling rigid_body_decouple(const ModalPlantModel& model, const SchedulingPoint& p) {
  const auto maps = mode_shape_eval(model, p);
  const int nr = model.axes();
  const Eigen::MatrixXd pa = maps.phi_a.topRows(nr);
  const Eigen::MatrixXd ps = maps.phi_s.leftCols(nr);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> ca(pa), cs(ps);
  if (ca.rank() < nr || cs.rank() < nr)
    throw ConfigError("rigid-body maps are rank deficient at " + point_text(p));
  return {ca.pseudoInverse(), cs.pseudoInverse()};
}

StateSpace decoupled_realization(const ModalPlantModel& model, const SchedulingPoint& p,
                                 const Decoupling& dec) {
  StateSpace ss = frozen_realization(model, p);
  ss.b = ss.b * dec.tu;
  ss.c = dec.ty * ss.c;
  ss.d = dec.ty * ss.d * dec.tu;
  return ss;
}

void DesignSpec::validate(int axes) const {
  if (static_cast<int>(loops.size()) != axes)
    throw ConfigError("design spec needs one loop per rigid axis");
  if (static_cast<int>(loop_order.size()) != axes) throw ConfigError("loop order has wrong length");
  std::vector<int> seen(static_cast<std::size_t>(axes), 0);
  for (int o : loop_order)
    if (o < 0 || o >= axes || seen[static_cast<std::size_t>(o)]++)
      throw ConfigError("loop order is not a permutation");
  for (const auto& l : loops)
    if (!(l.bandwidth_min_hz > 0.0) || !(l.bandwidth_cap_hz >= l.bandwidth_min_hz))
      throw ConfigError("loop " + l.name + ": need 0 < bandwidth_min <= bandwidth_cap");
  if (!(alpha > 0.0) || !(integrator_ratio > 0.0)) throw ConfigError("alpha and integrator ratio must be positive");
  if (design_nx < 1 || design_ny < 1 || verify_nx < 1 || verify_ny < 1)
    throw ConfigError("grid sizes must be positive");
  if (surface_order_i < 1 || surface_order_j < 1) throw ConfigError("surface orders must be >= 1");
  if (design_nx * design_ny < surface_order_i * surface_order_j)
    throw ConfigError("design grid smaller than the number of surface coefficients");
  if (bisection_iterations < 0) throw ConfigError("bisection iterations must be non-negative");
  if (notch.skews.empty() || notch.beta2.empty() || notch.beta1_ratio.empty())
    throw ConfigError("notch search family is empty");
  grid.validate();
}

bool ControllerSet::scheduled() const {
  return std::any_of(loops.begin(), loops.end(), [](const Cascade& c) { return c.scheduled(); });
}

std::vector<StateSpace> ControllerSet::realize_at(const SchedulingPoint& p,
                                                  const NotchLimits& limits) const {
  std::vector<StateSpace> out;
  for (const auto& c : loops) out.push_back(realize(c, p, limits));
  return out;
}

std::vector<SisoFrf> ControllerSet::frf_at(const SchedulingPoint& p, const FrequencyGrid& grid) const {
  std::vector<SisoFrf> out;
  for (const auto& c : loops) out.push_back(cascade_frf(c, p, grid));
  return out;
}

std::vector<FrozenPlant> sample_plant(const ModalPlantModel& model, const Decoupling& dec,
                                      const std::vector<SchedulingPoint>& points,
                                      const FrequencyGrid& grid, int jobs) {
  std::vector<FrozenPlant> out(points.size());
  parallel_for(static_cast<int>(points.size()), jobs, [&](int k) {
    auto& fp = out[static_cast<std::size_t>(k)];
    fp.p = points[static_cast<std::size_t>(k)];
    fp.ss = decoupled_realization(model, fp.p, dec);
    fp.frf = frf(*fp.ss, grid);
  });
  return out;
}

Gain tune_gain(const SisoFrf& g, const Cascade& partial, double f_bw) {
  if (!(f_bw > 0.0)) throw ConfigError("tuning frequency must be positive");
  const double w = 2.0 * kPi * f_bw;
  cdouble c = 1.0;
  for (const auto& e : partial.elements) c *= element_response(e, std::nullopt, w);
  const double mag = std::abs(c) * g.magnitude_at(f_bw);
  if (!(mag > 0.0) || !std::isfinite(mag))
    throw NumericalError("loop magnitude at the tuning frequency is zero or not finite");
  return Gain{1.0 / mag};
}

double rigid_line_mass(const SisoFrf& g, double max_hz) {
  std::vector<double> m;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.grid.hz[k] > max_hz) break;
    const double w = g.grid.omega(k);
    m.push_back(1.0 / (w * w * std::abs(g.values(static_cast<Eigen::Index>(k)))));
  }
  if (m.empty()) throw ConfigError("frequency grid has no points on the rigid-body line");
  std::sort(m.begin(), m.end());
  return m[m.size() / 2];
}

std::vector<ResonanceSlot> find_resonance_slots(const std::vector<SisoFrf>& g, double mass,
                                                const NotchSearch& search) {
  struct Peak {
    double f;
    double ratio;
    std::size_t point;
  };
  std::vector<Peak> peaks;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto& fr = g[p];
    const auto n = static_cast<Eigen::Index>(fr.size());
    Eigen::ArrayXd r(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double w = fr.grid.omega(static_cast<std::size_t>(k));
      r(k) = std::abs(fr.values(k)) * mass * w * w;
    }
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
      if (fr.grid.hz[static_cast<std::size_t>(k)] <= 2.0 * search.rigid_line_max_hz) continue;
      if (r(k) > r(k - 1) && r(k) >= r(k + 1) && r(k) > search.peak_threshold)
        peaks.push_back({fr.grid.hz[static_cast<std::size_t>(k)], r(k), p});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.f < b.f; });

  struct Cluster {
    double start;
    double strength = 0.0;
    std::vector<std::optional<Peak>> best;
  };
  std::vector<Cluster> clusters;
  for (const auto& pk : peaks) {
    if (clusters.empty() || pk.f > clusters.back().start * (1.0 + search.cluster_tolerance)) {
      clusters.push_back({pk.f, 0.0, std::vector<std::optional<Peak>>(g.size())});
    }
    auto& c = clusters.back();
    c.strength = std::max(c.strength, pk.ratio);
    auto& b = c.best[pk.point];
    if (!b || pk.ratio > b->ratio) b = pk;
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const Cluster& a, const Cluster& b) { return a.strength > b.strength; });
  if (static_cast<int>(clusters.size()) > search.max_notches)
    clusters.resize(static_cast<std::size_t>(search.max_notches));
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const Cluster& a, const Cluster& b) { return a.start < b.start; });

  std::vector<ResonanceSlot> slots;
  for (const auto& c : clusters) {
    std::vector<double> fs;
    for (const auto& b : c.best)
      if (b) fs.push_back(b->f);
    std::sort(fs.begin(), fs.end());
    ResonanceSlot s;
    s.freq_hz = fs.size() % 2 ? fs[fs.size() / 2] : 0.5 * (fs[fs.size() / 2 - 1] + fs[fs.size() / 2]);
    for (const auto& b : c.best) {
      s.local_peak.push_back(b.has_value());
      s.local_freq_hz.push_back(b ? b->f : s.freq_hz);
    }
    slots.push_back(std::move(s));
  }
  return slots;
}

LpvNotch fit_lpv_notch(const ScheduledNotchDesign& d, int order_i, int order_j,
                       const Normalization& norm, double tolerance) {
  auto fit = [&](const FrozenDesignSet& set, const char* name) {
    const auto sf = fit_surface(set, order_i, order_j, norm);
    double scale = 0.0;
    for (const auto& s : set.samples) scale = std::max(scale, std::abs(s.value));
    scale = std::max(scale, 1e-300);
    for (double r : sf.report.residuals)
      if (std::abs(r) > tolerance * scale) {
        std::ostringstream os;
        os << "surface fit residual for " << name << " of loop " << d.loop << " slot " << d.slot
           << " exceeds tolerance (" << std::abs(r) / scale << " relative)";
        throw InfeasibleError(os.str());
      }
    return sf.surface;
  };
  return {fit(d.beta1, "beta1"), fit(d.beta2, "beta2"), fit(d.f1, "f1"), fit(d.f2, "f2")};
}

CertificationReport certify(const std::vector<FrozenPlant>& plants, const ControllerSet& controllers,
                            const DesignSpec& spec, bool use_oracle) {
  CertificationReport rep;
  rep.bound_db = spec.sensitivity_bound_db;
  rep.points.resize(plants.size());
  const int n = static_cast<int>(controllers.loops.size());
  std::vector<int> order = spec.loop_order;
  if (order.empty())
    for (int i = 0; i < n; ++i) order.push_back(i);
  std::vector<int> origin;
  for (const auto& c : controllers.loops) origin.push_back(origin_poles_of(c));

  parallel_for(static_cast<int>(plants.size()), spec.jobs, [&](int idx) {
    const FrozenPlant& fp = plants[static_cast<std::size_t>(idx)];
    PointVerdict& v = rep.points[static_cast<std::size_t>(idx)];
    v.p = fp.p;
    try {
      FrfMatrix pf = fp.frf;
      for (int attempt = 0;; ++attempt) {
        try {
          const auto k = controllers.frf_at(fp.p, pf.grid);
          const auto gseq = sequential_equivalent_plants(pf, k, order);
          v.encirclements.assign(static_cast<std::size_t>(n), 0);
          int total = 0;
          for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            v.encirclements[ui] =
                nyquist_encirclements(gseq[ui].values * k[ui].values, pf.grid, origin[ui]);
            total += v.encirclements[ui];
          }
          v.nyquist_stable = total == 0;
          v.sensitivity_peak_db.clear();
          v.crossover_hz.clear();
          v.phase_margin_deg.clear();
          v.sensitivity_ok = true;
          for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            SisoFrf l = equivalent_plant(pf, k, i);
            l.values *= k[ui].values;
            const auto m = margins_and_bandwidth(l);
            v.sensitivity_peak_db.push_back(m.sensitivity_peak_db);
            v.crossover_hz.push_back(m.crossover_hz.value_or(NAN));
            v.phase_margin_deg.push_back(m.phase_margin_deg);
            if (m.sensitivity_peak_db > spec.sensitivity_bound_db) v.sensitivity_ok = false;
          }
          v.det_residual = det_identity_residual(pf, k, order);
          break;
        } catch (const GridDensityError&) {
          if (!fp.ss || attempt >= 2) throw;
          pf = frf(*fp.ss, pf.grid.refined(4));
        }
      }
      if (use_oracle && fp.ss) {
        v.eigen_max_real = closed_loop_max_real(*fp.ss, controllers.realize_at(fp.p));
      }
      std::vector<std::string> why;
      if (!v.nyquist_stable) why.push_back("Nyquist instability");
      if (!v.sensitivity_ok) why.push_back("sensitivity bound violated");
      if (!(v.det_residual <= 1e-6)) why.push_back("determinant identity residual too large");
      v.passed = why.empty();
      for (std::size_t w = 0; w < why.size(); ++w) v.failure += (w ? "; " : "") + why[w];
    } catch (const Error& e) {
      v.passed = false;
      v.failure = e.what();
    }
  });

  rep.passed = true;
  for (const auto& v : rep.points) {
    rep.passed = rep.passed && v.passed;
    if (v.eigen_max_real && (*v.eigen_max_real < 0.0) != v.nyquist_stable) rep.oracle_agrees = false;
  }
  if (!rep.oracle_agrees) log().error("Nyquist verdicts disagree with the closed-loop eigenvalues");
  return rep;
}

DesignResult design_lti_slc(const ModalPlantModel& model, const DesignSpec& spec) {
  return SlcDesigner(model, spec, false).run();
}

DesignResult design_lpv_slc(const ModalPlantModel& model, const DesignSpec& spec) {
  return SlcDesigner(model, spec, true).run();
}

DesignSpec benchmark_design_spec() {
  DesignSpec s;
  s.loops = {{"z", 400.0, 10.0, true}, {"rx", 25.0, 5.0, false}, {"ry", 25.0, 5.0, false}};
  s.loop_order = {0, 1, 2};
  s.notch.max_notches = 1;
  return s;
}

}  // namespace lpvslc
