#include "jccscan/object_loader.hpp"
#include "jccscan/error.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <tuple>

namespace jccscan {

namespace {

// Bounds-checked little-endian reader over the whole image.
class ByteReader {
public:
  explicit ByteReader(std::span<const std::uint8_t> image) : image_(image) {}

  bool in_bounds(std::uint64_t offset, std::uint64_t size) const {
    return offset <= image_.size() && size <= image_.size() - offset;
  }

  template <typename T> T read(std::uint64_t offset) const {
    if (!in_bounds(offset, sizeof(T)))
      throw Error(ErrorKind::malformed_container,
                  "header field at offset " + std::to_string(offset) +
                      " lies beyond end of file");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      value |= static_cast<T>(static_cast<T>(image_[offset + i]) << (8 * i));
    return value;
  }

  std::span<const std::uint8_t> slice(std::uint64_t offset, std::uint64_t size,
                                      std::string_view what) const {
    if (!in_bounds(offset, size))
      throw Error(ErrorKind::malformed_container,
                  std::string(what) + " extends beyond end of file");
    return image_.subspan(offset, size);
  }

  std::string c_string(std::uint64_t offset, std::uint64_t limit) const {
    std::string out;
    limit = std::min<std::uint64_t>(limit, image_.size());
    for (std::uint64_t i = offset; i < limit && image_[i] != 0; ++i)
      out.push_back(static_cast<char>(image_[i]));
    return out;
  }

  std::size_t size() const { return image_.size(); }

private:
  std::span<const std::uint8_t> image_;
};

void check_address_range(std::uint64_t va, std::uint64_t size, std::string_view name) {
  if (size > std::numeric_limits<std::uint64_t>::max() - va)
    throw Error(ErrorKind::malformed_container,
                "section " + std::string(name) + " wraps the address space");
}

// ELF64 constants
constexpr std::uint8_t kElfClass64 = 2;
constexpr std::uint8_t kElfDataLsb = 1;
constexpr std::uint16_t kElfMachineX86_64 = 62;
constexpr std::uint32_t kShtNobits = 8;
constexpr std::uint32_t kShtSymtab = 2;
constexpr std::uint32_t kShtDynsym = 11;
constexpr std::uint64_t kShfExecinstr = 0x4;
constexpr std::uint32_t kPtLoad = 1;
constexpr std::uint32_t kPfX = 1;
constexpr std::uint16_t kShnXindex = 0xFFFF;
constexpr std::uint64_t kShdrSize = 64;
constexpr std::uint64_t kPhdrSize = 56;
constexpr std::uint64_t kSymSize = 24;

struct ElfSectionHeader {
  std::uint32_t name;
  std::uint32_t type;
  std::uint64_t flags;
  std::uint64_t addr;
  std::uint64_t offset;
  std::uint64_t size;
  std::uint32_t link;
};

struct ElfLayout {
  std::vector<ElfSectionHeader> sections;
  std::uint64_t shstrndx = 0;
  std::uint64_t phoff = 0;
  std::uint64_t phnum = 0;
};

void check_elf_identity(const ByteReader &r) {
  if (r.read<std::uint8_t>(4) != kElfClass64)
    throw Error(ErrorKind::unsupported_format, "only 64-bit ELF is supported");
  if (r.read<std::uint8_t>(5) != kElfDataLsb)
    throw Error(ErrorKind::unsupported_format, "big-endian ELF is not supported");
  if (r.read<std::uint16_t>(18) != kElfMachineX86_64)
    throw Error(ErrorKind::unsupported_format, "ELF machine is not x86-64");
}

ElfLayout read_elf_layout(const ByteReader &r) {
  check_elf_identity(r);
  ElfLayout layout;
  layout.phoff = r.read<std::uint64_t>(32);
  const auto shoff = r.read<std::uint64_t>(40);
  const auto phentsize = r.read<std::uint16_t>(54);
  layout.phnum = r.read<std::uint16_t>(56);
  const auto shentsize = r.read<std::uint16_t>(58);
  std::uint64_t shnum = r.read<std::uint16_t>(60);
  layout.shstrndx = r.read<std::uint16_t>(62);

  if (layout.phnum != 0 && phentsize != kPhdrSize)
    throw Error(ErrorKind::malformed_container, "unexpected ELF program header size");
  if (shoff == 0)
    return layout;
  if (shentsize != kShdrSize)
    throw Error(ErrorKind::malformed_container, "unexpected ELF section header size");

  // Extended numbering: the real counts live in section header 0.
  if (shnum == 0)
    shnum = r.read<std::uint64_t>(shoff + 32);
  if (layout.shstrndx == kShnXindex)
    layout.shstrndx = r.read<std::uint32_t>(shoff + 40);

  if (shnum > r.size() / kShdrSize || !r.in_bounds(shoff, shnum * kShdrSize))
    throw Error(ErrorKind::malformed_container, "ELF section header table exceeds file size");

  layout.sections.reserve(shnum);
  for (std::uint64_t i = 0; i < shnum; ++i) {
    const std::uint64_t base = shoff + i * kShdrSize;
    layout.sections.push_back({
        r.read<std::uint32_t>(base + 0),
        r.read<std::uint32_t>(base + 4),
        r.read<std::uint64_t>(base + 8),
        r.read<std::uint64_t>(base + 16),
        r.read<std::uint64_t>(base + 24),
        r.read<std::uint64_t>(base + 32),
        r.read<std::uint32_t>(base + 40),
    });
  }
  return layout;
}

std::string elf_section_name(const ByteReader &r, const ElfLayout &layout,
                             const ElfSectionHeader &sh) {
  if (layout.shstrndx >= layout.sections.size())
    return {};
  const auto &strtab = layout.sections[layout.shstrndx];
  if (sh.name >= strtab.size || !r.in_bounds(strtab.offset, strtab.size))
    return {};
  return r.c_string(strtab.offset + sh.name, strtab.offset + strtab.size);
}

std::vector<CodeSection> load_elf(const ByteReader &r, std::string_view source) {
  const ElfLayout layout = read_elf_layout(r);
  std::vector<CodeSection> out;

  if (!layout.sections.empty()) {
    for (const auto &sh : layout.sections) {
      if ((sh.flags & kShfExecinstr) == 0 || sh.type == kShtNobits || sh.size == 0)
        continue;
      std::string name = elf_section_name(r, layout, sh);
      const auto bytes = r.slice(sh.offset, sh.size, "section " + name);
      check_address_range(sh.addr, sh.size, name);
      out.push_back({std::move(name), sh.addr, {bytes.begin(), bytes.end()},
                     std::string(source), sh.offset});
    }
  } else {
    // No section table: fall back to executable loadable segments.
    for (std::uint64_t i = 0; i < layout.phnum; ++i) {
      const std::uint64_t base = layout.phoff + i * kPhdrSize;
      if (r.read<std::uint32_t>(base) != kPtLoad || (r.read<std::uint32_t>(base + 4) & kPfX) == 0)
        continue;
      const auto offset = r.read<std::uint64_t>(base + 8);
      const auto vaddr = r.read<std::uint64_t>(base + 16);
      const auto filesz = r.read<std::uint64_t>(base + 32);
      if (filesz == 0)
        continue;
      std::string name = "PT_LOAD[" + std::to_string(i) + "]";
      const auto bytes = r.slice(offset, filesz, name);
      check_address_range(vaddr, filesz, name);
      out.push_back({std::move(name), vaddr, {bytes.begin(), bytes.end()},
                     std::string(source), offset});
    }
  }
  return out;
}

// PE32+ constants
constexpr std::uint16_t kPeMachineAmd64 = 0x8664;
constexpr std::uint16_t kPeMagic64 = 0x20B;
constexpr std::uint32_t kScnMemExecute = 0x20000000;
constexpr std::uint64_t kPeSectionSize = 40;

std::vector<CodeSection> load_pe(const ByteReader &r, std::string_view source) {
  const std::uint64_t pe_offset = r.read<std::uint32_t>(0x3C);
  if (r.read<std::uint32_t>(pe_offset) != 0x00004550)
    throw Error(ErrorKind::unsupported_format, "missing PE signature");
  const std::uint64_t coff = pe_offset + 4;
  if (r.read<std::uint16_t>(coff) != kPeMachineAmd64)
    throw Error(ErrorKind::unsupported_format, "PE machine is not x86-64");
  const std::uint64_t nsections = r.read<std::uint16_t>(coff + 2);
  const std::uint64_t opt_size = r.read<std::uint16_t>(coff + 16);
  const std::uint64_t opt = coff + 20;
  if (r.read<std::uint16_t>(opt) != kPeMagic64)
    throw Error(ErrorKind::unsupported_format, "only PE32+ (64-bit) images are supported");
  const auto image_base = r.read<std::uint64_t>(opt + 24);

  const std::uint64_t table = opt + opt_size;
  if (!r.in_bounds(table, nsections * kPeSectionSize))
    throw Error(ErrorKind::malformed_container, "PE section table exceeds file size");

  std::vector<CodeSection> out;
  for (std::uint64_t i = 0; i < nsections; ++i) {
    const std::uint64_t base = table + i * kPeSectionSize;
    const auto characteristics = r.read<std::uint32_t>(base + 36);
    if ((characteristics & kScnMemExecute) == 0)
      continue;
    const auto raw_name = r.slice(base, 8, "section name");
    std::string name(raw_name.begin(), std::find(raw_name.begin(), raw_name.end(), 0));
    const auto virtual_size = r.read<std::uint32_t>(base + 8);
    const auto rva = r.read<std::uint32_t>(base + 12);
    const auto raw_size = r.read<std::uint32_t>(base + 16);
    const auto raw_ptr = r.read<std::uint32_t>(base + 20);
    const std::uint64_t size =
        virtual_size == 0 ? raw_size : std::min(virtual_size, raw_size);
    if (size == 0)
      continue;
    const auto bytes = r.slice(raw_ptr, size, "section " + name);
    if (rva > std::numeric_limits<std::uint64_t>::max() - image_base)
      throw Error(ErrorKind::malformed_container, "PE image base plus RVA overflows");
    const std::uint64_t va = image_base + rva;
    check_address_range(va, size, name);
    out.push_back({std::move(name), va, {bytes.begin(), bytes.end()}, std::string(source),
                   raw_ptr});
  }
  return out;
}

} // namespace

std::optional<ContainerFormat> sniff_format(std::span<const std::uint8_t> image) {
  if (image.size() >= 4 && image[0] == 0x7F && image[1] == 'E' && image[2] == 'L' &&
      image[3] == 'F')
    return ContainerFormat::elf;
  if (image.size() >= 2 && image[0] == 'M' && image[1] == 'Z')
    return ContainerFormat::pe;
  return std::nullopt;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad())
    throw Error(ErrorKind::io, "read error on " + path.string());
  return data;
}

std::vector<CodeSection> load_sections(std::span<const std::uint8_t> image, FormatHint hint,
                                       std::string_view source_path) {
  const auto format = sniff_format(image);
  if (!format)
    throw Error(ErrorKind::unsupported_format,
                std::string(source_path) + ": magic bytes match neither ELF nor PE");
  if ((hint == FormatHint::elf && *format != ContainerFormat::elf) ||
      (hint == FormatHint::pe && *format != ContainerFormat::pe))
    throw Error(ErrorKind::unsupported_format,
                std::string(source_path) + ": format hint does not match magic bytes");

  const ByteReader reader(image);
  auto sections = *format == ContainerFormat::elf ? load_elf(reader, source_path)
                                                  : load_pe(reader, source_path);
  std::stable_sort(sections.begin(), sections.end(),
                   [](const CodeSection &a, const CodeSection &b) {
                     return a.virtual_address < b.virtual_address;
                   });
  return sections;
}

std::vector<CodeSection> load_sections(const std::filesystem::path &path, FormatHint hint) {
  const auto data = read_file(path);
  return load_sections(data, hint, path.string());
}

std::vector<FunctionSymbol> load_function_symbols(std::span<const std::uint8_t> image) {
  if (sniff_format(image) != ContainerFormat::elf)
    return {};
  const ByteReader r(image);
  const ElfLayout layout = read_elf_layout(r);

  std::vector<FunctionSymbol> symbols;
  for (const auto &sh : layout.sections) {
    if (sh.type != kShtSymtab && sh.type != kShtDynsym)
      continue;
    if (sh.link >= layout.sections.size() || !r.in_bounds(sh.offset, sh.size))
      continue;
    const auto &strtab = layout.sections[sh.link];
    if (!r.in_bounds(strtab.offset, strtab.size))
      continue;
    for (std::uint64_t off = sh.offset; off + kSymSize <= sh.offset + sh.size; off += kSymSize) {
      const auto info = r.read<std::uint8_t>(off + 4);
      const auto shndx = r.read<std::uint16_t>(off + 6);
      const auto value = r.read<std::uint64_t>(off + 8);
      const auto size = r.read<std::uint64_t>(off + 16);
      if ((info & 0xF) != 2 /* STT_FUNC */ || shndx == 0 || value == 0)
        continue;
      const auto name_off = r.read<std::uint32_t>(off);
      if (name_off >= strtab.size)
        continue;
      symbols.push_back({r.c_string(strtab.offset + name_off, strtab.offset + strtab.size),
                         value, size});
    }
  }
  std::sort(symbols.begin(), symbols.end(), [](const auto &a, const auto &b) {
    return std::tie(a.address, a.size, a.name) < std::tie(b.address, b.size, b.name);
  });
  symbols.erase(std::unique(symbols.begin(), symbols.end(),
                            [](const auto &a, const auto &b) {
                              return a.address == b.address && a.size == b.size &&
                                     a.name == b.name;
                            }),
                symbols.end());
  return symbols;
}

} // namespace jccscan
