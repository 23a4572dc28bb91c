#pragma once

#include <stdexcept>
#include <string>

namespace trajkit {

/// Failure classes. The CLI maps each class to a fixed exit code.
enum class ErrorKind {
  Domain,       // argument outside the mathematical domain (t out of range, ...)
  Argument,     // malformed call: dimension mismatch, k = 0, negative gamma
  Unsupported,  // operation not defined for this schedule/solver kind
  Numeric,      // divergence, non-finite loss, singular denominators
  Config,       // run-config parse or validation failure
  Artifact,     // missing input file
  Checkpoint,   // corrupt, truncated or future-version checkpoint
  Usage,        // API misuse such as a stale gradient tape
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

const char* to_string(ErrorKind kind) noexcept;

}  // namespace trajkit
