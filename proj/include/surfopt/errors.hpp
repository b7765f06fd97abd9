#pragma once

#include <stdexcept>

namespace surfopt {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes do not match what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar or element value is outside its allowed range.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// The constraint set is empty, or its strict interior is empty.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to produce a usable result.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A backward pass was requested on a solution that never converged.
class StaleSolutionError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace surfopt
