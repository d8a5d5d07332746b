#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pathvi {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller violated a precondition (bad parameter, non-finite input, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the closed unit ball (beyond tolerance).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A field/instance specification document is malformed.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  explicit ParseError(const std::string& msg) : Error(msg), byte_offset(0) {}
  std::size_t byte_offset;
};

/// An enumeration request exceeds the configured budget; carries the count
/// that would have been required.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& msg, std::uint64_t required)
      : Error(msg + " (required " + std::to_string(required) + ")"),
        required(required) {}
  std::uint64_t required;
};

/// F vanished where the initialization iteration needs to normalize it.
class DegenerateFieldError : public Error {
 public:
  using Error::Error;
};

/// The path tracker lost its orientation repeatedly or got pinned to the
/// boundary without the stopping rule firing.
class PathDegenerateError : public Error {
 public:
  using Error::Error;
};

/// A combinatorial construction fell short of its target size; carries the
/// size that was achieved.
class ConstructionError : public Error {
 public:
  ConstructionError(const std::string& msg, std::uint64_t achieved)
      : Error(msg + " (achieved " + std::to_string(achieved) + ")"),
        achieved(achieved) {}
  std::uint64_t achieved;
};

}  // namespace pathvi
