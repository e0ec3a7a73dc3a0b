#include "jccscan/insn_stream.hpp"
#include "jccscan/error.hpp"
#include "jccscan/x86_decoder.hpp"

#include <algorithm>

namespace jccscan {

std::string_view to_string(OperandTrait t) {
  switch (t) {
  case OperandTrait::rip_relative_operand: return "rip_relative_operand";
  case OperandTrait::memory_destination: return "memory_destination";
  case OperandTrait::immediate_and_memory_source: return "immediate_and_memory_source";
  }
  return "";
}

std::optional<OperandTrait> parse_trait(std::string_view text) {
  for (OperandTrait t : kAllTraits)
    if (to_string(t) == text)
      return t;
  return std::nullopt;
}

namespace {

InstructionRecord make_record(std::uint64_t address, const x86::DecodedInstruction &insn) {
  InstructionRecord rec;
  rec.address = address;
  rec.length = insn.length;
  rec.mnemonic = std::string(insn.mnemonic);
  rec.is_cond_jump = insn.condition.has_value();
  rec.cond_code = insn.condition;
  if (!rec.is_cond_jump) {
    if (insn.rip_relative)
      rec.traits.insert(OperandTrait::rip_relative_operand);
    if (insn.writes_memory_operand)
      rec.traits.insert(OperandTrait::memory_destination);
    if (insn.has_immediate && insn.memory_operand)
      rec.traits.insert(OperandTrait::immediate_and_memory_source);
  }
  return rec;
}

} // namespace

DecodedStream decode_stream(const CodeSection &section) {
  if (section.bytes.empty())
    throw Error(ErrorKind::precondition, "decode_stream: section " + section.name + " is empty");

  DecodedStream out;
  out.records.reserve(section.bytes.size() / 4);
  const std::span<const std::uint8_t> bytes(section.bytes);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto insn = x86::decode_one(bytes.subspan(pos));
    if (!insn) {
      ++out.bytes_skipped;
      ++pos;
      continue;
    }
    out.records.push_back(make_record(section.virtual_address + pos, *insn));
    pos += insn->length;
  }
  return out;
}

std::vector<AdjacentPair> find_adjacent_pairs(std::span<const InstructionRecord> records) {
  std::vector<AdjacentPair> pairs;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto &jump = records[i];
    const auto &prev = records[i - 1];
    if (jump.is_cond_jump && prev.end_address() == jump.address)
      pairs.push_back({prev, jump});
  }
  return pairs;
}

std::size_t count_cond_jumps(std::span<const InstructionRecord> records) {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const auto &r) { return r.is_cond_jump; }));
}

} // namespace jccscan
