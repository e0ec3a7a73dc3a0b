#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jccscan {

enum class ErrorKind {
  io,
  unsupported_format,
  malformed_container,
  unknown_profile,
  invalid_profile,
  precondition,
  geometry_out_of_range,
  range,
  too_many_levels,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace jccscan
