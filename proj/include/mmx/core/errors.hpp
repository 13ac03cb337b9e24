#pragma once

#include <stdexcept>
#include <string>

namespace mmx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A utility (value or reward) came out non-finite.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// A pinned action was not legal for its agent at the depth it was injected.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// An action does not fit the game phase or rules.
class IllegalActionError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmx
