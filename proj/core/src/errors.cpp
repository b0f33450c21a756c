#include "tiledit/errors.hpp"

namespace tiledit {

std::string_view error_slug(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_range: return "invalid-range";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::not_divisible: return "not-divisible";
    case ErrorCode::invalid_factor: return "invalid-factor";
    case ErrorCode::out_of_bounds: return "out-of-bounds";
    case ErrorCode::count_mismatch: return "count-mismatch";
    case ErrorCode::unknown_conditioning: return "unknown-conditioning";
    case ErrorCode::singular_covariance: return "singular-covariance";
    case ErrorCode::unsupported_backend: return "unsupported-backend";
    case ErrorCode::diverged_training: return "diverged-training";
    case ErrorCode::model_unavailable: return "model-unavailable";
    case ErrorCode::scale_out_of_range: return "scale-out-of-range";
    case ErrorCode::mode_mismatch: return "mode-mismatch";
    case ErrorCode::missing_cache: return "missing-cache";
    case ErrorCode::schedule_mismatch: return "schedule-mismatch";
    case ErrorCode::input_not_found: return "input-not-found";
    case ErrorCode::bad_format: return "bad-format";
    case ErrorCode::io_failure: return "io-failure";
  }
  return "unknown-error";
}

bool is_usage_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_range:
    case ErrorCode::not_divisible:
    case ErrorCode::invalid_factor:
    case ErrorCode::unknown_conditioning:
    case ErrorCode::unsupported_backend:
    case ErrorCode::scale_out_of_range:
    case ErrorCode::mode_mismatch:
    case ErrorCode::schedule_mismatch:
    case ErrorCode::input_not_found:
      return true;
    default:
      return false;
  }
}

}  // namespace tiledit
