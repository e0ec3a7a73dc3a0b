#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace jccscan {

// x86 condition codes in encoding order, so `opcode & 0xF` of a Jcc indexes
// this enum directly and negation is a flip of the low bit.
enum class Condition : std::uint8_t {
  o, no, c, nc, z, nz, na, a, s, ns, p, np, l, nl, ng, g,
};

inline constexpr unsigned kConditionCount = 16;

constexpr Condition negate(Condition cc) {
  return static_cast<Condition>(static_cast<std::uint8_t>(cc) ^ 1u);
}

constexpr Condition condition_from_code(unsigned code) {
  return static_cast<Condition>(code & 0xFu);
}

/// Canonical tag, e.g. "nz" for jne/jnz.
std::string_view to_string(Condition cc);

/// Accepts canonical tags and the usual aliases (e, ne, b, nae, ae, nb, be,
/// nbe, ge, nge, le, nle, pe, po), with or without a leading 'j'.
std::optional<Condition> parse_condition(std::string_view text);

class ConditionSet {
public:
  constexpr ConditionSet() = default;
  constexpr ConditionSet(std::initializer_list<Condition> init) {
    for (Condition cc : init)
      insert(cc);
  }

  constexpr void insert(Condition cc) { bits_ |= mask(cc); }
  constexpr bool contains(Condition cc) const { return (bits_ & mask(cc)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint16_t bits() const { return bits_; }

  friend constexpr bool operator==(ConditionSet, ConditionSet) = default;

private:
  static constexpr std::uint16_t mask(Condition cc) {
    return static_cast<std::uint16_t>(1u << static_cast<unsigned>(cc));
  }
  std::uint16_t bits_ = 0;
};

} // namespace jccscan
