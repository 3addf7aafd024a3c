#pragma once

#include <stdexcept>
#include <string>

namespace netmpc {

// Base for all library errors. Subclasses let the CLI pick an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad config, wrong dimensions, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Data produced for one setup used with another (e.g. moments hash mismatch).
class DataMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace netmpc
