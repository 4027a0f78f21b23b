/// @file error.hpp
/// @brief Exception types shared by every nematic module.
#pragma once

#include <stdexcept>
#include <string>

namespace nematic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, parameters, shapes or configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Linear-solve failure, NaN detection or a violated solver hypothesis (CLI exit code 1).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// A linear solve whose post-solve residual exceeded the tolerance.
class SolverError : public NumericalError {
public:
  SolverError(const std::string& what, double residual)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

#define NEMATIC_REQUIRE(cond, ErrType, msg) \
  do {                                      \
    if (!(cond)) throw ErrType(msg);        \
  } while (0)

}  // namespace nematic
