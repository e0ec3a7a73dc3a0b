#pragma once

#include "jccscan/condition.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace jccscan::x86 {

inline constexpr std::size_t kMaxInstructionLength = 15;

/// Length and the handful of attributes the fusion and placement analyses
/// consume. Mnemonics are exact for the integer ALU, control-flow and nop
/// families; other instructions get a coarse family name ("sse", "vex",
/// "x87", ...).
struct DecodedInstruction {
  std::uint8_t length = 0;
  std::string_view mnemonic;
  std::optional<Condition> condition; // set only for Jcc
  bool has_modrm = false;
  bool memory_operand = false;
  bool rip_relative = false;
  bool has_immediate = false; // excludes branch displacements and moffs
  bool writes_memory_operand = false;
};

/// Decodes one 64-bit-mode instruction at the start of `bytes`; nullopt when
/// the bytes are not a valid encoding or the buffer ends mid-instruction.
std::optional<DecodedInstruction> decode_one(std::span<const std::uint8_t> bytes);

} // namespace jccscan::x86
