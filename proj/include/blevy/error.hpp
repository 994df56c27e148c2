#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blevy {

enum class ErrorKind {
  SubcriticalOrCritical,
  InvalidParameter,
  NoConvergence,
  NegativeDuration,
  InvalidCheckpoints,
  MaxAttemptsExhausted,
  InsufficientReplicates,
  ParseError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SubcriticalOrCritical: return "SubcriticalOrCritical";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NegativeDuration: return "NegativeDuration";
    case ErrorKind::InvalidCheckpoints: return "InvalidCheckpoints";
    case ErrorKind::MaxAttemptsExhausted: return "MaxAttemptsExhausted";
    case ErrorKind::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library. `field` names the offending config
// key or argument when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) +
                           (field.empty() ? "" : "(" + field + ")") + ": " + message),
        kind_(kind),
        field_(std::move(field)),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string field_;
  std::string message_;
};

class MaxAttemptsExhausted : public Error {
 public:
  explicit MaxAttemptsExhausted(std::size_t attempts)
      : Error(ErrorKind::MaxAttemptsExhausted, "max_attempts",
              "no surviving run in " + std::to_string(attempts) + " attempts"),
        attempts_(attempts) {}

  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

}  // namespace blevy
