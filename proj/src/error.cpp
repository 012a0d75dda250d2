#include "helmproof/error.hpp"

namespace helmproof {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::ZeroDimension: return "ZeroDimension";
    case ErrorKind::UnknownLens: return "UnknownLens";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DivByZero: return "DivByZero";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnsupportedNode: return "UnsupportedNode";
    case ErrorKind::UnsupportedPredicate: return "UnsupportedPredicate";
    case ErrorKind::NotDifferentiable: return "NotDifferentiable";
    case ErrorKind::TestFailed: return "TestFailed";
    case ErrorKind::MissingInvariant: return "MissingInvariant";
    case ErrorKind::UnsupportedTheory: return "UnsupportedTheory";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::InvalidProgram: return "InvalidProgram";
    case ErrorKind::NoProgress: return "NoProgress";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UnknownProgram: return "UnknownProgram";
    case ErrorKind::UnknownVc: return "UnknownVc";
  }
  return "Unknown";
}

static std::string decorate(ErrorKind kind, const std::string& msg, int line, int col) {
  std::string out = to_string(kind);
  if (line > 0) out += " at " + std::to_string(line) + ":" + std::to_string(col);
  if (!msg.empty()) out += ": " + msg;
  return out;
}

Error::Error(ErrorKind kind, const std::string& message, int line, int col)
    : std::runtime_error(decorate(kind, message, line, col)),
      kind_(kind),
      message_(message),
      line_(line),
      col_(col) {}

bool is_eval_error(ErrorKind kind) noexcept {
  return kind == ErrorKind::DivByZero || kind == ErrorKind::DomainError ||
         kind == ErrorKind::NonFiniteState;
}

}  // namespace helmproof
