#include "cts/error.hpp"

namespace cts {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::schema_violation: return "schema_violation";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::missing_component: return "missing_component";
    case ErrorCode::empty_input: return "empty_input";
  }
  return "unknown";
}

}  // namespace cts
