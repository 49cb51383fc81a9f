#pragma once

#include <stdexcept>
#include <string>

namespace brep {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A parameter lies outside its admissible domain (p < 1, negative weight, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A matrix that must be invertible is singular or too badly conditioned.
class SingularMatrixError : public Error {
  public:
    using Error::Error;
};

/// The measurements do not determine the null-space component: rank(V) < N0.
class WellPosednessError : public Error {
  public:
    using Error::Error;
};

/// Requested operation is not defined for the given norm (e.g. a membership
/// test through a set-valued duality mapping).
class UnsupportedError : public Error {
  public:
    using Error::Error;
};

} // namespace brep
