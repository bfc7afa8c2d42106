#pragma once

#include <stdexcept>
#include <string>

namespace hgrow {

// Root of all library errors. Each subclass names the contract that failed.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Two weight sets cannot be merged with the direct sum.
class CompositionError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vectors or a search that only ever produced the zero response.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hgrow
