#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tiledit {

// Every failure the library raises carries one of these codes. The CLI maps
// them to stable kebab-case slugs and to exit codes (usage/config errors exit
// with 2, runtime failures with 3).
enum class ErrorCode {
  invalid_range,
  shape_mismatch,
  index_out_of_range,
  not_divisible,
  invalid_factor,
  out_of_bounds,
  count_mismatch,
  unknown_conditioning,
  singular_covariance,
  unsupported_backend,
  diverged_training,
  model_unavailable,
  scale_out_of_range,
  mode_mismatch,
  missing_cache,
  schedule_mismatch,
  input_not_found,
  bad_format,
  io_failure,
};

// Stable slug used in CLI error lines, e.g. "scale-out-of-range".
std::string_view error_slug(ErrorCode code);

// True for errors caused by bad arguments or config (CLI exit code 2),
// false for failures hit while running (exit code 3).
bool is_usage_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_slug(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tiledit
