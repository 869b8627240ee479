#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fkdet {

/// Base of every error the library reports for bad input or unmet preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments outside an operation's domain (descriptor mismatch, non-square
/// matrix, zero polynomial, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined for the requested group family.
class UnsupportedFamily : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Caller-side precondition failed (e.g. a tile violating its interior bound).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Exact search or enumeration requested beyond its supported scale.
class ScaleExceeded : public Error {
 public:
  using Error::Error;
};

/// The compression is singular, so the dual solution set is infinite.
class InfiniteSolutionSet : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fkdet
