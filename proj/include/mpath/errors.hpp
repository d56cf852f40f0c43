#ifndef MPATH_ERRORS_HPP_
#define MPATH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mpath {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the documented domain of an operation.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (e.g. unnormalized weights).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Registry-level failures: duplicate ids, dangling references, frozen writes.
class StoreError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. Maps to exit code 2 in the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpath

#endif  // MPATH_ERRORS_HPP_
