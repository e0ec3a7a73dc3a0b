#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jccscan {

enum class ContainerFormat { elf, pe };

/// `automatic` sniffs the magic bytes; the other values must match them.
enum class FormatHint { automatic, elf, pe };

/// An executable region of a binary, addressed by where it is mapped at run
/// time. All alignment arithmetic downstream uses `virtual_address`.
struct CodeSection {
  std::string name;
  std::uint64_t virtual_address = 0;
  std::vector<std::uint8_t> bytes;
  std::string source_path;
  std::uint64_t file_offset = 0;

  std::uint64_t end_address() const { return virtual_address + bytes.size(); }
};

struct FunctionSymbol {
  std::string name;
  std::uint64_t address = 0;
  std::uint64_t size = 0;
};

std::optional<ContainerFormat> sniff_format(std::span<const std::uint8_t> image);

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);

/// Returns the executable sections of a 64-bit ELF or PE32+ image ordered by
/// virtual address. Throws Error{unsupported_format} for other containers and
/// Error{malformed_container} when headers point outside the image.
std::vector<CodeSection> load_sections(std::span<const std::uint8_t> image,
                                       FormatHint hint = FormatHint::automatic,
                                       std::string_view source_path = "<memory>");

std::vector<CodeSection> load_sections(const std::filesystem::path &path,
                                       FormatHint hint = FormatHint::automatic);

/// Function symbols from ELF .symtab/.dynsym, sorted by address. Empty for
/// PE images and stripped ELF files.
std::vector<FunctionSymbol> load_function_symbols(std::span<const std::uint8_t> image);

} // namespace jccscan
