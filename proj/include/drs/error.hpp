#pragma once

#include <stdexcept>
#include <string>

namespace drs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-parameter"; }
};

// Input outside the mathematical domain, e.g. Im(tau) not positive definite.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain-error"; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical-error"; }
};

class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "singular-system"; }
};

class PrecisionUnreachable : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "precision-unreachable"; }
};

class ResourceLimit : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "resource-limit"; }
};

class InternalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "internal-error"; }
};

}  // namespace drs
