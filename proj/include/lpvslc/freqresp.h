#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lpvslc/plant.h"

namespace lpvslc {

using cdouble = std::complex<double>;

struct FrequencyGrid {
  std::vector<double> hz;

  static FrequencyGrid logspace(double f_lo, double f_hi, int n);
  static FrequencyGrid default_grid() { return logspace(1.0, 5000.0, 1000); }

  std::size_t size() const { return hz.size(); }
  double omega(std::size_t k) const;
  // Inserts `factor - 1` log-spaced points inside every interval.
  FrequencyGrid refined(int factor) const;
  void validate() const;
};

struct SisoFrf {
  FrequencyGrid grid;
  Eigen::ArrayXcd values;

  static SisoFrf constant(const FrequencyGrid& grid, cdouble value);
  std::size_t size() const { return grid.size(); }
  // Log-log interpolation of the magnitude at f_hz (exact on grid points).
  double magnitude_at(double f_hz) const;
};

struct FrfMatrix {
  FrequencyGrid grid;
  std::vector<Eigen::MatrixXcd> values;

  int rows() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
  int cols() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }
  SisoFrf entry(int i, int j) const;
  void validate() const;
};

cdouble frf_at(const StateSpace& ss, double omega, int out = 0, int in = 0);
FrfMatrix frf(const StateSpace& ss, const FrequencyGrid& grid);
SisoFrf frf_siso(const StateSpace& ss, const FrequencyGrid& grid);

// Equivalent plant seen by loop i when every other loop j is closed with
// -k_j feedback. k[i] is ignored; a zero k[j] leaves loop j open.
SisoFrf equivalent_plant(const FrfMatrix& p, const std::vector<SisoFrf>& k, int i);

// Equivalent plants for sequential closing in the given order: the loop at
// position t of `order` sees the loops at positions < t closed and the rest
// open. Result is indexed by loop, not by position.
std::vector<SisoFrf> sequential_equivalent_plants(const FrfMatrix& p,
                                                  const std::vector<SisoFrf>& k,
                                                  const std::vector<int>& order);

// max over the grid of |det(I+PK) - prod_i(1 + g^i k_i)| / |det(I+PK)| with
// g^i the sequential equivalent plants for `order` (identity order if empty).
double det_identity_residual(const FrfMatrix& p, const std::vector<SisoFrf>& k,
                             const std::vector<int>& order = {});

struct NyquistResult {
  int encirclements = 0;  // net clockwise encirclements of -1
  bool stable = false;
};

// Winding-number Nyquist test on L(jw) over the positive-frequency grid,
// extended by conjugate symmetry. `origin_poles` open-loop poles at s = 0 are
// passed on the right. Throws GridDensityError if 1+L turns by more than 90
// degrees between neighbouring grid points.
NyquistResult nyquist_stable(const SisoFrf& l, int n_open_rhp = 0, int origin_poles = 0);
int nyquist_encirclements(const Eigen::ArrayXcd& l, const FrequencyGrid& grid, int origin_poles);

struct LoopMargins {
  std::optional<double> crossover_hz;
  double phase_margin_deg = 0.0;
  double sensitivity_peak_db = 0.0;
};

LoopMargins margins_and_bandwidth(const SisoFrf& l);
double sensitivity_peak_db(const Eigen::ArrayXcd& l);

// Largest real part of the eigenvalues of the loop closed with e = -y and a
// diagonal controller (one SISO realization per channel).
double closed_loop_max_real(const StateSpace& plant, const std::vector<StateSpace>& controllers);
Eigen::MatrixXd closed_loop_matrix(const StateSpace& plant,
                                   const std::vector<StateSpace>& controllers);

void write_frf_csv(std::ostream& os, const FrfMatrix& frf);
FrfMatrix read_frf_csv(std::istream& is);

}  // namespace lpvslc
