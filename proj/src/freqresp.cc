#include "lpvslc/freqresp.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <lapacke.h>

#include "lpvslc/errors.h"

namespace lpvslc {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

std::string hz_text(double f) {
  std::ostringstream os;
  os << std::setprecision(6) << f << " Hz";
  return os.str();
}

}  // namespace

FrequencyGrid FrequencyGrid::logspace(double f_lo, double f_hi, int n) {
  if (!(f_lo > 0.0) || !(f_hi > f_lo) || n < 2)
    throw ConfigError("log grid needs 0 < f_lo < f_hi and at least two points");
  FrequencyGrid g;
  g.hz.resize(static_cast<std::size_t>(n));
  const double l0 = std::log10(f_lo);
  const double l1 = std::log10(f_hi);
  for (int k = 0; k < n; ++k)
    g.hz[static_cast<std::size_t>(k)] = std::pow(10.0, l0 + (l1 - l0) * k / (n - 1));
  g.hz.front() = f_lo;
  g.hz.back() = f_hi;
  return g;
}

double FrequencyGrid::omega(std::size_t k) const { return 2.0 * kPi * hz[k]; }

FrequencyGrid FrequencyGrid::refined(int factor) const {
  if (factor < 1) throw ConfigError("refinement factor must be >= 1");
  FrequencyGrid g;
  for (std::size_t k = 0; k + 1 < hz.size(); ++k) {
    const double r = std::log(hz[k + 1] / hz[k]);
    g.hz.push_back(hz[k]);
    for (int s = 1; s < factor; ++s) g.hz.push_back(hz[k] * std::exp(r * s / factor));
  }
  if (!hz.empty()) g.hz.push_back(hz.back());
  return g;
}

void FrequencyGrid::validate() const {
  if (hz.empty()) throw ConfigError("frequency grid is empty");
  for (std::size_t k = 0; k < hz.size(); ++k) {
    if (!(hz[k] > 0.0) || !std::isfinite(hz[k]))
      throw ConfigError("frequency grid values must be finite and positive");
    if (k > 0 && !(hz[k] > hz[k - 1]))
      throw ConfigError("frequency grid must be strictly increasing");
  }
}

SisoFrf SisoFrf::constant(const FrequencyGrid& grid, cdouble value) {
  SisoFrf f;
  f.grid = grid;
  f.values = Eigen::ArrayXcd::Constant(static_cast<Eigen::Index>(grid.size()), value);
  return f;
}

double SisoFrf::magnitude_at(double f_hz) const {
  const auto& h = grid.hz;
  if (h.empty()) throw NumericalError("empty FRF");
  if (f_hz <= h.front()) return std::abs(values(0));
  if (f_hz >= h.back()) return std::abs(values(values.size() - 1));
  const auto it = std::lower_bound(h.begin(), h.end(), f_hz);
  const auto k = static_cast<Eigen::Index>(it - h.begin());
  if (*it == f_hz) return std::abs(values(k));
  const double t = std::log(f_hz / h[static_cast<std::size_t>(k - 1)]) /
                   std::log(*it / h[static_cast<std::size_t>(k - 1)]);
  const double m0 = std::log(std::abs(values(k - 1)));
  const double m1 = std::log(std::abs(values(k)));
  return std::exp(m0 + t * (m1 - m0));
}

SisoFrf FrfMatrix::entry(int i, int j) const {
  SisoFrf f;
  f.grid = grid;
  f.values.resize(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k)
    f.values(static_cast<Eigen::Index>(k)) = values[k](i, j);
  return f;
}

void FrfMatrix::validate() const {
  grid.validate();
  if (values.size() != grid.size()) throw ConfigError("FRF: one matrix per grid point required");
  for (const auto& m : values)
    if (m.rows() != rows() || m.cols() != cols())
      throw ConfigError("FRF: inconsistent matrix dimensions across the grid");
}

namespace {

Eigen::MatrixXcd response(const StateSpace& ss, double omega) {
  const auto n = ss.a.rows();
  if (n == 0) return ss.d.cast<cdouble>();
  Eigen::MatrixXcd m = -ss.a.cast<cdouble>();
  m.diagonal().array() += cdouble(0.0, omega);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  if (!(lu.rcond() > 1e-14))
    throw NumericalError("singular (jwI - A) at " + hz_text(omega / (2.0 * kPi)));
  return ss.c.cast<cdouble>() * lu.solve(ss.b.cast<cdouble>()) + ss.d.cast<cdouble>();
}

}  // namespace

cdouble frf_at(const StateSpace& ss, double omega, int out, int in) {
  return response(ss, omega)(out, in);
}

FrfMatrix frf(const StateSpace& ss, const FrequencyGrid& grid) {
  ss.validate();
  grid.validate();
  FrfMatrix f;
  f.grid = grid;
  f.values.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) f.values.push_back(response(ss, grid.omega(k)));
  return f;
}

SisoFrf frf_siso(const StateSpace& ss, const FrequencyGrid& grid) {
  if (ss.inputs() != 1 || ss.outputs() != 1) throw ConfigError("frf_siso needs a SISO system");
  return frf(ss, grid).entry(0, 0);
}

SisoFrf equivalent_plant(const FrfMatrix& p, const std::vector<SisoFrf>& k, int i) {
  const int n = p.rows();
  if (p.cols() != n) throw ConfigError("equivalent plant needs a square FRF matrix");
  if (static_cast<int>(k.size()) != n) throw ConfigError("one controller FRF per loop required");
  if (i < 0 || i >= n) throw ConfigError("loop index out of range");
  for (int j = 0; j < n; ++j)
    if (j != i && k[static_cast<std::size_t>(j)].size() != p.grid.size())
      throw ConfigError("controller FRF grid does not match plant grid");

  // Row/column swap W_i P W_i brings loop i to the first position.
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) perm[static_cast<std::size_t>(j)] = j;
  std::swap(perm[0], perm[static_cast<std::size_t>(i)]);

  SisoFrf g;
  g.grid = p.grid;
  g.values.resize(static_cast<Eigen::Index>(p.grid.size()));
  const int m = n - 1;
  for (std::size_t f = 0; f < p.grid.size(); ++f) {
    const auto& pf = p.values[f];
    Eigen::MatrixXcd pi(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        pi(r, c) = pf(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]);
    if (m == 0) {
      g.values(static_cast<Eigen::Index>(f)) = pi(0, 0);
      continue;
    }
    Eigen::VectorXcd kd(m);
    for (int r = 0; r < m; ++r)
      kd(r) = k[static_cast<std::size_t>(perm[static_cast<std::size_t>(r + 1)])]
                  .values(static_cast<Eigen::Index>(f));
    const Eigen::MatrixXcd p22k = pi.bottomRightCorner(m, m) * kd.asDiagonal();
    Eigen::MatrixXcd closing = Eigen::MatrixXcd::Identity(m, m) + p22k;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(closing);
    if (!(lu.rcond() > 1e-13))
      throw NumericalError("singular loop-closing matrix at " + hz_text(p.grid.hz[f]));
    const Eigen::VectorXcd x = lu.solve(pi.bottomLeftCorner(m, 1));
    const cdouble corr = (pi.topRightCorner(1, m) * kd.asDiagonal() * x)(0, 0);
    g.values(static_cast<Eigen::Index>(f)) = pi(0, 0) - corr;
  }
  return g;
}

std::vector<SisoFrf> sequential_equivalent_plants(const FrfMatrix& p,
                                                  const std::vector<SisoFrf>& k,
                                                  const std::vector<int>& order) {
  const int n = p.rows();
  if (static_cast<int>(order.size()) != n) throw ConfigError("loop order has wrong length");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (int o : order) {
    if (o < 0 || o >= n || seen[static_cast<std::size_t>(o)]++)
      throw ConfigError("loop order is not a permutation");
  }
  std::vector<SisoFrf> out(static_cast<std::size_t>(n));
  std::vector<SisoFrf> closed(static_cast<std::size_t>(n), SisoFrf::constant(p.grid, 0.0));
  for (int t = 0; t < n; ++t) {
    const int loop = order[static_cast<std::size_t>(t)];
    out[static_cast<std::size_t>(loop)] = equivalent_plant(p, closed, loop);
    closed[static_cast<std::size_t>(loop)] = k[static_cast<std::size_t>(loop)];
  }
  return out;
}

double det_identity_residual(const FrfMatrix& p, const std::vector<SisoFrf>& k,
                             const std::vector<int>& order_in) {
  const int n = p.rows();
  std::vector<int> order = order_in;
  if (order.empty())
    for (int i = 0; i < n; ++i) order.push_back(i);
  const auto g = sequential_equivalent_plants(p, k, order);
  double worst = 0.0;
  for (std::size_t f = 0; f < p.grid.size(); ++f) {
    Eigen::MatrixXcd kd = Eigen::MatrixXcd::Zero(n, n);
    cdouble prod = 1.0;
    for (int i = 0; i < n; ++i) {
      const cdouble ki = k[static_cast<std::size_t>(i)].values(static_cast<Eigen::Index>(f));
      kd(i, i) = ki;
      prod *= 1.0 + g[static_cast<std::size_t>(i)].values(static_cast<Eigen::Index>(f)) * ki;
    }
    const Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n) + p.values[f] * kd;
    const cdouble det = m.partialPivLu().determinant();
    if (std::abs(det) == 0.0)
      throw NumericalError("det(I+PK) vanishes at " + hz_text(p.grid.hz[f]));
    worst = std::max(worst, std::abs(det - prod) / std::abs(det));
  }
  return worst;
}

int nyquist_encirclements(const Eigen::ArrayXcd& l, const FrequencyGrid& grid, int origin_poles) {
  const auto n = l.size();
  if (n < 2 || static_cast<std::size_t>(n) != grid.size())
    throw ConfigError("Nyquist test needs a loop FRF on its grid (>= 2 points)");
  if (origin_poles < 0) throw ConfigError("origin pole count must be non-negative");
  const Eigen::ArrayXcd r = 1.0 + l;
  for (Eigen::Index k = 0; k < n; ++k)
    if (r(k) == cdouble(0.0))
      throw NumericalError("1 + L vanishes at " + hz_text(grid.hz[static_cast<std::size_t>(k)]));

  const double half = origin_poles * kPi / 2.0;
  double start = 0.0;
  if (origin_poles > 0)
    start = -half + (std::cos(std::arg(l(0)) + half) >= 0.0 ? 0.0 : kPi);
  else
    start = r(0).real() >= 0.0 ? 0.0 : kPi;

  double delta = wrap_pi(std::arg(r(0)) - start);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double step = std::arg(r(k) * std::conj(r(k - 1)));
    if (std::abs(step) > kPi / 2.0)
      throw GridDensityError("frequency grid too coarse for the Nyquist test near " +
                                 hz_text(grid.hz[static_cast<std::size_t>(k)]),
                             grid.hz[static_cast<std::size_t>(k)]);
    delta += step;
  }
  if (!(std::abs(l(n - 1)) < 1.0))
    throw NumericalError("loop gain has not rolled off below 1 at the grid end (" +
                         hz_text(grid.hz.back()) + ")");
  delta += wrap_pi(-std::arg(r(n - 1)));

  const double count = (origin_poles * kPi - 2.0 * delta) / (2.0 * kPi);
  const double rounded = std::round(count);
  if (std::abs(count - rounded) > 0.25)
    throw NumericalError("inconsistent winding number; refine the frequency grid");
  return static_cast<int>(rounded);
}

NyquistResult nyquist_stable(const SisoFrf& l, int n_open_rhp, int origin_poles) {
  NyquistResult res;
  res.encirclements = nyquist_encirclements(l.values, l.grid, origin_poles);
  res.stable = res.encirclements == -n_open_rhp;
  return res;
}

double sensitivity_peak_db(const Eigen::ArrayXcd& l) {
  const double min_abs = (1.0 + l).abs().minCoeff();
  return -20.0 * std::log10(min_abs);
}

LoopMargins margins_and_bandwidth(const SisoFrf& l) {
  LoopMargins m;
  m.sensitivity_peak_db = sensitivity_peak_db(l.values);
  const auto& h = l.grid.hz;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    const auto a = static_cast<Eigen::Index>(k);
    const double m0 = std::log(std::abs(l.values(a)));
    const double m1 = std::log(std::abs(l.values(a + 1)));
    if (m0 == 0.0 || (m0 > 0.0) != (m1 > 0.0)) {
      const double t = m0 == m1 ? 0.0 : m0 / (m0 - m1);
      const double lf = std::log(h[k]) + t * (std::log(h[k + 1]) - std::log(h[k]));
      m.crossover_hz = std::exp(lf);
      const double p0 = std::arg(l.values(a));
      const double p1 = p0 + std::arg(l.values(a + 1) / l.values(a));
      const double phase = p0 + t * (p1 - p0);
      m.phase_margin_deg = wrap_pi(kPi + phase) * 180.0 / kPi;
      break;
    }
  }
  return m;
}

Eigen::MatrixXd closed_loop_matrix(const StateSpace& plant,
                                   const std::vector<StateSpace>& controllers) {
  plant.validate();
  const int ny = plant.outputs();
  const int nu = plant.inputs();
  if (ny != nu || static_cast<int>(controllers.size()) != nu)
    throw ConfigError("closed loop needs a square plant and one controller per channel");
  if (!plant.d.isZero()) throw ConfigError("closed loop requires a strictly proper plant");

  int nk = 0;
  for (const auto& c : controllers) {
    c.validate();
    if (c.inputs() != 1 || c.outputs() != 1) throw ConfigError("controllers must be SISO");
    nk += c.order();
  }
  Eigen::MatrixXd ak = Eigen::MatrixXd::Zero(nk, nk);
  Eigen::MatrixXd bk = Eigen::MatrixXd::Zero(nk, nu);
  Eigen::MatrixXd ck = Eigen::MatrixXd::Zero(nu, nk);
  Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(nu, nu);
  int off = 0;
  for (int i = 0; i < nu; ++i) {
    const auto& c = controllers[static_cast<std::size_t>(i)];
    const int o = c.order();
    ak.block(off, off, o, o) = c.a;
    bk.block(off, i, o, 1) = c.b;
    ck.block(i, off, 1, o) = c.c;
    dk(i, i) = c.d(0, 0);
    off += o;
  }
  const int np = plant.order();
  Eigen::MatrixXd acl(np + nk, np + nk);
  acl.topLeftCorner(np, np) = plant.a - plant.b * dk * plant.c;
  acl.topRightCorner(np, nk) = plant.b * ck;
  acl.bottomLeftCorner(nk, np) = -bk * plant.c;
  acl.bottomRightCorner(nk, nk) = ak;
  return acl;
}

double closed_loop_max_real(const StateSpace& plant, const std::vector<StateSpace>& controllers) {
  Eigen::MatrixXd acl = closed_loop_matrix(plant, controllers);
  const auto n = static_cast<lapack_int>(acl.rows());
  if (n == 0) return -std::numeric_limits<double>::infinity();
  std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, acl.data(), n, wr.data(), wi.data(),
                                        nullptr, 1, nullptr, 1);
  if (info != 0) throw NumericalError("closed-loop eigenvalue solver failed (dgeev info " + std::to_string(info) + ")");
  return *std::max_element(wr.begin(), wr.end());
}

void write_frf_csv(std::ostream& os, const FrfMatrix& f) {
  f.validate();
  if (f.rows() > 9 || f.cols() > 9) throw ConfigError("CSV export supports at most 9x9 FRFs");
  os << "freq_hz";
  for (int i = 0; i < f.rows(); ++i)
    for (int j = 0; j < f.cols(); ++j) os << ",re_" << i + 1 << j + 1 << ",im_" << i + 1 << j + 1;
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < f.grid.size(); ++k) {
    os << f.grid.hz[k];
    for (int i = 0; i < f.rows(); ++i)
      for (int j = 0; j < f.cols(); ++j)
        os << ',' << f.values[k](i, j).real() << ',' << f.values[k](i, j).imag();
    os << '\n';
  }
}

FrfMatrix read_frf_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("FRF CSV: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "freq_hz") throw ConfigError("FRF CSV: first column must be freq_hz");
  if ((cols.size() - 1) % 2 != 0) throw ConfigError("FRF CSV: unpaired re/im columns");
  int rows = 0, ncols = 0;
  std::vector<std::pair<int, int>> idx;
  for (std::size_t c = 1; c < cols.size(); c += 2) {
    const auto& re = cols[c];
    const auto& im = cols[c + 1];
    if (re.size() != 5 || re.rfind("re_", 0) != 0 || im != "im_" + re.substr(3))
      throw ConfigError("FRF CSV: bad column pair '" + re + "," + im + "'");
    const int i = re[3] - '0';
    const int j = re[4] - '0';
    if (i < 1 || j < 1) throw ConfigError("FRF CSV: bad index in '" + re + "'");
    rows = std::max(rows, i);
    ncols = std::max(ncols, j);
    idx.emplace_back(i - 1, j - 1);
  }
  if (static_cast<int>(idx.size()) != rows * ncols) throw ConfigError("FRF CSV: incomplete matrix");

  FrfMatrix f;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("FRF CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != cols.size())
      throw ConfigError("FRF CSV line " + std::to_string(lineno) + ": wrong column count");
    f.grid.hz.push_back(v[0]);
    Eigen::MatrixXcd m(rows, ncols);
    for (std::size_t c = 0; c < idx.size(); ++c)
      m(idx[c].first, idx[c].second) = cdouble(v[1 + 2 * c], v[2 + 2 * c]);
    f.values.push_back(m);
  }
  f.validate();
  return f;
}

}  // namespace lpvslc
