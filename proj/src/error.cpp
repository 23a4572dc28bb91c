#include "trajkit/error.hpp"

namespace trajkit {

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Unsupported: return "unsupported operation";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Artifact: return "missing artifact";
    case ErrorKind::Checkpoint: return "checkpoint error";
    case ErrorKind::Usage: return "usage error";
  }
  return "error";
}

}  // namespace trajkit
