#ifndef BANDSVD_ERRORS_HPP
#define BANDSVD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bandsvd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or tile extents do not fit the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Tile, sweep or slot index outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary matrix file; the message names the offending field.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid tunables (tile size, columns per block, split-K, worker count).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input values rejected before any work is done (NaN/Inf entries).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Reference data that makes a metric meaningless (e.g. an all-zero spectrum).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// An iterative stage exceeded its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace bandsvd

#endif  // BANDSVD_ERRORS_HPP
