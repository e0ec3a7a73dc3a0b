#include "jccscan/condition.hpp"
#include "jccscan/error.hpp"

#include <array>
#include <utility>

namespace jccscan {

namespace {

constexpr std::array<std::string_view, kConditionCount> kCanonical = {
    "o", "no", "c", "nc", "z", "nz", "na", "a",
    "s", "ns", "p", "np", "l", "nl", "ng", "g",
};

constexpr std::array<std::pair<std::string_view, Condition>, 14> kAliases = {{
    {"e", Condition::z},    {"ne", Condition::nz},  {"b", Condition::c},
    {"nae", Condition::c},  {"ae", Condition::nc},  {"nb", Condition::nc},
    {"be", Condition::na},  {"nbe", Condition::a},  {"ge", Condition::nl},
    {"nge", Condition::l},  {"le", Condition::ng},  {"nle", Condition::g},
    {"pe", Condition::p},   {"po", Condition::np},
}};

} // namespace

std::string_view to_string(Condition cc) {
  return kCanonical[static_cast<unsigned>(cc)];
}

std::optional<Condition> parse_condition(std::string_view text) {
  if (text.size() > 1 && text.front() == 'j')
    text.remove_prefix(1);
  for (unsigned i = 0; i < kConditionCount; ++i)
    if (kCanonical[i] == text)
      return static_cast<Condition>(i);
  for (const auto &[alias, cc] : kAliases)
    if (alias == text)
      return cc;
  return std::nullopt;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::io: return "io-error";
  case ErrorKind::unsupported_format: return "unsupported-format";
  case ErrorKind::malformed_container: return "malformed-container";
  case ErrorKind::unknown_profile: return "unknown-profile";
  case ErrorKind::invalid_profile: return "invalid-profile";
  case ErrorKind::precondition: return "precondition-violation";
  case ErrorKind::geometry_out_of_range: return "geometry-out-of-range";
  case ErrorKind::range: return "range-violation";
  case ErrorKind::too_many_levels: return "too-many-levels";
  }
  return "error";
}

} // namespace jccscan
