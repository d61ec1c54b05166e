#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tomocomet {

enum class ErrorCode {
  invalid_argument,
  degenerate_covariance,
  singular_fim,
  io_error,
  estimator_failure,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `code()` is stable and is what the CLI prints on
/// its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tomocomet
