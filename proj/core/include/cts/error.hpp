#pragma once

#include <stdexcept>
#include <string>

namespace cts {

enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  non_finite,
  schema_violation,
  parse_error,
  io_error,
  divergence,
  unsupported,
  version_mismatch,
  missing_component,
  empty_input,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code so
/// the CLI can report it as structured JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace cts
