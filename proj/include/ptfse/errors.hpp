#pragma once

#include <stdexcept>
#include <string>

namespace ptfse {

// Base of every error thrown by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Misuse of a typed value, e.g. a compressed mask where an uncompressed one is required.
class ContractError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by training when the loss stops being finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ptfse
