#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace jccscan {

/// The offset-shifted `sub rcx, 1 / jnz` loop microbenchmark.
struct BenchSpec {
  unsigned offset_b = 0;         // 0..63
  std::uint32_t iterations = 200; // loaded as a sign-extended imm32
  bool instrument = true;         // lfence/rdtsc around the loop

  void validate() const;
};

// Fixed encodings used by the raw-byte path.
inline constexpr std::uint8_t kNop = 0x90;
inline constexpr std::size_t kCounterSetupLength = 7; // mov rcx, imm32
inline constexpr std::size_t kSubLength = 4;          // sub rcx, 1
inline constexpr std::size_t kJnzLength = 2;          // jnz rel8

/// GNU as (Intel syntax) source for a callable `uint64_t jcc_bench(void)`
/// returning the TSC delta across the loop. The `loop` label lands at
/// offset_b within a 64-byte line.
std::string emit_assembly(const BenchSpec &spec);

/// offset_b NOPs, the counter setup, then sub/jnz. Index 0 is assumed to sit
/// on a 64-byte boundary; the sub starts at index offset_b + 7.
std::vector<std::uint8_t> emit_loop_bytes(const BenchSpec &spec);

inline std::size_t loop_sub_index(const BenchSpec &spec) {
  return spec.offset_b + kCounterSetupLength;
}

/// Text for the sidecar file written next to a raw-byte benchmark.
std::string loop_bytes_sidecar(const BenchSpec &spec);

} // namespace jccscan
