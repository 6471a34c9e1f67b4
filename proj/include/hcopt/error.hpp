#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hcopt {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector lengths disagree with the problem dimension.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An input falls outside the set where an operation is defined.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t coordinate)
      : Error(what + " (coordinate " + std::to_string(coordinate) + ")"), coordinate_(coordinate) {}
  explicit DomainError(const std::string& what) : Error(what) {}

  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_ = static_cast<std::size_t>(-1);
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// phi evaluated at a pole of the Saturating or Share family.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// The empirical transformation has a zero derivative in some coordinate,
/// so its inverse Jacobian does not exist at the requested point.
class SingularTransformError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed problem instance (degenerate sample set, invalid NRM data).
class InstanceError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hcopt
