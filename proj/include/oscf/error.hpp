#pragma once

#include <stdexcept>
#include <string>

namespace oscf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an RK4 update produces NaN or infinity.
class IntegrationDiverged : public Error {
 public:
  using Error::Error;
};

// Post-reset state violates the target location invariant.
class ResetContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input vector outside the location's input box.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

}  // namespace oscf
