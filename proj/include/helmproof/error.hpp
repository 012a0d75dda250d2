#pragma once

#include <stdexcept>
#include <string>

namespace helmproof {

enum class ErrorKind {
  DuplicateName,
  ZeroDimension,
  UnknownLens,
  ShapeMismatch,
  IndexOutOfRange,
  DivByZero,
  DomainError,
  RaggedRows,
  ParseError,
  UnsupportedNode,
  UnsupportedPredicate,
  NotDifferentiable,
  TestFailed,
  MissingInvariant,
  UnsupportedTheory,
  NonFiniteState,
  InvalidProgram,
  NoProgress,
  IoError,
  UnknownProgram,
  UnknownVc,
};

const char* to_string(ErrorKind kind) noexcept;

/// All library failures are reported through this exception. Parse-related
/// errors carry a 1-based source location (line 0 means "no location").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, int line = 0, int col = 0);

  ErrorKind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  int col() const noexcept { return col_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
  int line_;
  int col_;
};

/// True for the failures that can arise while evaluating a well-shaped
/// expression at a concrete state.
bool is_eval_error(ErrorKind kind) noexcept;

}  // namespace helmproof
