#include "jccscan/benchgen.hpp"
#include "jccscan/error.hpp"

#include <cstdio>
#include <limits>
#include <sstream>

namespace jccscan {

void BenchSpec::validate() const {
  if (offset_b > 63)
    throw Error(ErrorKind::range, "offset_b must be in 0..63");
  if (iterations < 1 || iterations > static_cast<std::uint32_t>(std::numeric_limits<std::int32_t>::max()))
    throw Error(ErrorKind::range, "iterations must be in 1..2^31-1");
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

} // namespace

std::string emit_assembly(const BenchSpec &spec) {
  spec.validate();
  std::ostringstream s;
  s << "# jcc_bench: sub/jnz loop placed at offset " << spec.offset_b
    << " of a 64-byte line, " << spec.iterations << " iterations.\n"
    << "# Build: as -o bench.o bench.s  (or gcc -c bench.s); call as uint64_t jcc_bench(void).\n"
    << "    .intel_syntax noprefix\n"
    << "    .text\n"
    << "    .globl jcc_bench\n"
    << "    .type jcc_bench, @function\n"
    << "    .p2align 6\n"
    << "jcc_bench:\n";
  if (spec.instrument) {
    s << "    lfence\n"
      << "    # call PAPI_read   (counter snapshot; link PAPI to enable)\n"
      << "    lfence\n"
      << "    rdtsc\n"
      << "    lfence\n"
      << "    shl rdx, 32\n"
      << "    or rax, rdx\n"
      << "    mov r8, rax\n";
  }
  s << "    mov rcx," << hex(spec.iterations) << '\n'
    << "    .p2align 6\n"
    << "    .rept " << spec.offset_b << '\n'
    << "    nop                 # shift the loop position\n"
    << "    .endr\n"
    << "loop:\n"
    << "    sub rcx, 1\n"
    << "    jnz loop\n";
  if (spec.instrument) {
    s << "    lfence\n"
      << "    rdtsc\n"
      << "    lfence\n"
      << "    # call PAPI_read\n"
      << "    shl rdx, 32\n"
      << "    or rax, rdx\n"
      << "    sub rax, r8\n";
  } else {
    s << "    xor eax, eax\n";
  }
  s << "    ret\n"
    << "    .size jcc_bench, .-jcc_bench\n"
    << "    .section .note.GNU-stack,\"\",@progbits\n";
  return s.str();
}

std::vector<std::uint8_t> emit_loop_bytes(const BenchSpec &spec) {
  spec.validate();
  std::vector<std::uint8_t> out(spec.offset_b, kNop);
  const std::uint32_t n = spec.iterations;
  // mov rcx, imm32
  out.insert(out.end(), {0x48, 0xC7, 0xC1, static_cast<std::uint8_t>(n),
                         static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n >> 16),
                         static_cast<std::uint8_t>(n >> 24)});
  // sub rcx, 1 ; jnz back to the sub
  out.insert(out.end(), {0x48, 0x83, 0xE9, 0x01});
  out.insert(out.end(), {0x75, static_cast<std::uint8_t>(-static_cast<int>(kSubLength + kJnzLength))});
  return out;
}

std::string loop_bytes_sidecar(const BenchSpec &spec) {
  std::ostringstream s;
  s << "base_address = 0x0\n"
    << "base_alignment = 64\n"
    << "offset_b = " << spec.offset_b << '\n'
    << "iterations = " << spec.iterations << '\n'
    << "sub_index = " << loop_sub_index(spec) << '\n'
    << "jnz_index = " << loop_sub_index(spec) + kSubLength << '\n'
    << "sub_offset_in_line = " << loop_sub_index(spec) % 64 << '\n';
  return s.str();
}

} // namespace jccscan
