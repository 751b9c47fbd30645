#ifndef OVBSL_ERROR_HPP
#define OVBSL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace ovbsl {

enum class ErrorCode {
  dimension_mismatch,
  mask_value_not_binary,
  nonzero_at_masked_position,
  nonpositive_parameter,
  overflow,
  not_positive_definite,
  division_underflow,
  nonpositive_denominator,
  invalid_spec,
  shape_mismatch,
  io_error,
  format_error,
  config_error,
  cap_exceeded,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ovbsl

#endif  // OVBSL_ERROR_HPP
