#pragma once

#include "jccscan/condition.hpp"
#include "jccscan/object_loader.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jccscan {

/// Operand attributes that block macro-op fusion of the first instruction of
/// a pair.
enum class OperandTrait : std::uint8_t {
  rip_relative_operand = 1u << 0,
  memory_destination = 1u << 1,
  immediate_and_memory_source = 1u << 2,
};

class TraitSet {
public:
  constexpr TraitSet() = default;
  constexpr TraitSet(std::initializer_list<OperandTrait> init) {
    for (OperandTrait t : init)
      insert(t);
  }

  constexpr void insert(OperandTrait t) { bits_ |= static_cast<std::uint8_t>(t); }
  constexpr bool contains(OperandTrait t) const {
    return (bits_ & static_cast<std::uint8_t>(t)) != 0;
  }
  constexpr bool intersects(TraitSet other) const { return (bits_ & other.bits_) != 0; }
  constexpr bool empty() const { return bits_ == 0; }

  friend constexpr bool operator==(TraitSet, TraitSet) = default;

private:
  std::uint8_t bits_ = 0;
};

inline constexpr std::array<OperandTrait, 3> kAllTraits = {
    OperandTrait::rip_relative_operand,
    OperandTrait::memory_destination,
    OperandTrait::immediate_and_memory_source,
};

std::string_view to_string(OperandTrait t);
std::optional<OperandTrait> parse_trait(std::string_view text);

struct InstructionRecord {
  std::uint64_t address = 0;
  std::uint8_t length = 0;
  std::string mnemonic;
  bool is_cond_jump = false;
  std::optional<Condition> cond_code;
  TraitSet traits; // never set on jumps

  std::uint64_t end_address() const { return address + length; }

  friend bool operator==(const InstructionRecord &, const InstructionRecord &) = default;
};

struct AdjacentPair {
  InstructionRecord first;
  InstructionRecord jump;
};

struct DecodedStream {
  std::vector<InstructionRecord> records;
  std::uint64_t bytes_skipped = 0;
};

/// Linear sweep from the section start. Undecodable bytes are skipped one at
/// a time and counted in `bytes_skipped`.
DecodedStream decode_stream(const CodeSection &section);

/// One pair per conditional jump whose predecessor in `records` ends exactly
/// where the jump starts.
std::vector<AdjacentPair> find_adjacent_pairs(std::span<const InstructionRecord> records);

std::size_t count_cond_jumps(std::span<const InstructionRecord> records);

} // namespace jccscan
