#pragma once

#include <stdexcept>
#include <string>

namespace magheat {

/// Invalid user input: bad preset, out-of-range parameter, malformed config.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to meet its tolerance (quadrature,
/// eigensolver, conjugate gradient, boundary contamination).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The requested scale is not representable on the grid.
class ResolutionError : public NumericError {
public:
  using NumericError::NumericError;
};

} // namespace magheat
