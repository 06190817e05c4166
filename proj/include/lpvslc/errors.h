#pragma once

#include <stdexcept>
#include <string>

namespace lpvslc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration / parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A scheduling point or argument outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class GridDensityError : public NumericalError {
 public:
  GridDensityError(const std::string& what, double freq_hz)
      : NumericalError(what), freq_hz_(freq_hz) {}
  double freq_hz() const { return freq_hz_; }

 private:
  double freq_hz_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpvslc
