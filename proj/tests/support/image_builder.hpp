#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jccscan::testing {

struct SectionSpec {
  std::string name;
  std::uint64_t address = 0;
  std::vector<std::uint8_t> bytes;
  bool executable = true;
};

struct SymbolSpec {
  std::string name;
  std::uint64_t address = 0;
  std::uint64_t size = 0;
};

struct ElfOptions {
  bool section_headers = true;
  bool program_headers = false;
  std::vector<SymbolSpec> symbols; // emitted as .symtab when non-empty
};

/// Minimal little-endian ELF64 x86-64 executable.
std::vector<std::uint8_t> build_elf64(const std::vector<SectionSpec> &sections,
                                      const ElfOptions &options = {});

/// Minimal PE32+ image (magic 0x20B unless overridden).
std::vector<std::uint8_t> build_pe(const std::vector<SectionSpec> &sections,
                                   std::uint64_t image_base = 0x140000000ull,
                                   std::uint16_t optional_magic = 0x20B,
                                   std::uint16_t machine = 0x8664);

} // namespace jccscan::testing
