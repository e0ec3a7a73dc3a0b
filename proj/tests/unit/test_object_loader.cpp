#include "jccscan/error.hpp"
#include "jccscan/object_loader.hpp"

#include "image_builder.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace jccscan;
using jccscan::testing::build_elf64;
using jccscan::testing::build_pe;
using jccscan::testing::ElfOptions;
using jccscan::testing::SectionSpec;

namespace {

const std::filesystem::path kFixtures = JCCSCAN_FIXTURE_DIR;

ErrorKind kind_of_load_failure(const std::vector<std::uint8_t> &image,
                               FormatHint hint = FormatHint::automatic) {
  try {
    load_sections(image, hint);
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "load_sections did not throw";
  return ErrorKind::io;
}

} // namespace

TEST(ObjectLoader, ToolchainElfWithTwoNops) {
  const auto sections = load_sections(kFixtures / "nop2.elf");
  ASSERT_EQ(sections.size(), 1u);
  EXPECT_EQ(sections[0].virtual_address, 0x401000u);
  EXPECT_EQ(sections[0].bytes, (std::vector<std::uint8_t>{0x90, 0x90}));
  EXPECT_EQ(sections[0].name, ".text");
}

TEST(ObjectLoader, ToolchainElfWithoutCodeYieldsNothing) {
  EXPECT_TRUE(load_sections(kFixtures / "data_only.elf").empty());
}

TEST(ObjectLoader, ToolchainPeImage) {
  const auto image = read_file(kFixtures / "nop2_pe.exe");
  EXPECT_EQ(sniff_format(image), ContainerFormat::pe);
  const auto sections = load_sections(image);
  ASSERT_EQ(sections.size(), 1u);
  EXPECT_EQ(sections[0].name, ".text");
  EXPECT_EQ(sections[0].virtual_address, 0x140001000u);
  ASSERT_GE(sections[0].bytes.size(), 2u);
  EXPECT_EQ(sections[0].bytes[0], 0x90);
  EXPECT_EQ(sections[0].bytes[1], 0x90);
  EXPECT_TRUE(load_function_symbols(image).empty());
}

TEST(ObjectLoader, SectionBytesMatchFileOffsets) {
  for (const char *name : {"nop2.elf", "nop2_pe.exe"}) {
    const auto image = read_file(kFixtures / name);
    for (const auto &s : load_sections(image)) {
      ASSERT_LE(s.file_offset + s.bytes.size(), image.size());
      EXPECT_TRUE(std::equal(s.bytes.begin(), s.bytes.end(), image.begin() + s.file_offset)) << name;
    }
  }
}

TEST(ObjectLoader, ZipMagicIsUnsupported) {
  std::vector<std::uint8_t> zip = {'P', 'K', 3, 4, 0, 0, 0, 0};
  EXPECT_FALSE(sniff_format(zip).has_value());
  EXPECT_EQ(kind_of_load_failure(zip), ErrorKind::unsupported_format);
}

TEST(ObjectLoader, ThirtyTwoBitElfIsUnsupported) {
  auto image = build_elf64({{".text", 0x1000, {0x90}, true}});
  image[4] = 1; // ELFCLASS32
  EXPECT_EQ(kind_of_load_failure(image), ErrorKind::unsupported_format);
}

TEST(ObjectLoader, ForeignMachineIsUnsupported) {
  auto image = build_elf64({{".text", 0x1000, {0x90}, true}});
  image[18] = 183; // AArch64
  image[19] = 0;
  EXPECT_EQ(kind_of_load_failure(image), ErrorKind::unsupported_format);
  EXPECT_EQ(kind_of_load_failure(build_pe({{".text", 0x140001000, {0x90}, true}}, 0x140000000,
                                          0x20B, 0x014C)),
            ErrorKind::unsupported_format);
  EXPECT_EQ(kind_of_load_failure(build_pe({{".text", 0x140001000, {0x90}, true}}, 0x140000000,
                                          0x10B)),
            ErrorKind::unsupported_format);
}

TEST(ObjectLoader, HintMismatchIsUnsupported) {
  const auto elf = build_elf64({{".text", 0x1000, {0x90}, true}});
  EXPECT_EQ(kind_of_load_failure(elf, FormatHint::pe), ErrorKind::unsupported_format);
  EXPECT_EQ(load_sections(elf, FormatHint::elf).size(), 1u);
}

TEST(ObjectLoader, TruncatedImagesAreMalformed) {
  const auto elf = build_elf64({{".text", 0x1000, std::vector<std::uint8_t>(100, 0x90), true}});
  for (std::size_t cut : {std::size_t{8}, std::size_t{40}, std::size_t{70}, elf.size() - 10}) {
    std::vector<std::uint8_t> truncated(elf.begin(), elf.begin() + static_cast<long>(cut));
    const auto kind = kind_of_load_failure(truncated);
    EXPECT_TRUE(kind == ErrorKind::malformed_container || kind == ErrorKind::unsupported_format)
        << "cut at " << cut;
  }
  const auto pe = build_pe({{".text", 0x140001000, {0x90, 0x90}, true}});
  std::vector<std::uint8_t> truncated(pe.begin(), pe.begin() + 0x100);
  EXPECT_EQ(kind_of_load_failure(truncated), ErrorKind::malformed_container);
}

TEST(ObjectLoader, SectionPointingOutsideFileIsMalformed) {
  auto image = build_elf64({{".text", 0x1000, {0x90, 0x90}, true}});
  // Section header 1 sh_size lives at shoff + 64 + 32.
  std::uint64_t shoff = 0;
  for (int i = 0; i < 8; ++i)
    shoff |= std::uint64_t{image[40 + i]} << (8 * i);
  image[shoff + 64 + 32 + 3] = 0x7F;
  EXPECT_EQ(kind_of_load_failure(image), ErrorKind::malformed_container);
}

TEST(ObjectLoader, OnlyExecutableSectionsInAddressOrder) {
  const auto image = build_elf64({
      {".text.hot", 0x402000, {0xC3}, true},
      {".rodata", 0x403000, {1, 2, 3}, false},
      {".init", 0x401000, {0x90, 0xC3}, true},
  });
  const auto sections = load_sections(image);
  ASSERT_EQ(sections.size(), 2u);
  EXPECT_EQ(sections[0].name, ".init");
  EXPECT_EQ(sections[0].virtual_address, 0x401000u);
  EXPECT_EQ(sections[1].name, ".text.hot");
  EXPECT_EQ(sections[1].bytes, (std::vector<std::uint8_t>{0xC3}));
}

TEST(ObjectLoader, SegmentsUsedWhenSectionHeadersAreAbsent) {
  ElfOptions options;
  options.section_headers = false;
  options.program_headers = true;
  const auto image = build_elf64({{"code", 0x400080, {0x90, 0x90, 0xC3}, true},
                                  {"data", 0x600000, {7, 7}, false}},
                                 options);
  const auto sections = load_sections(image);
  ASSERT_EQ(sections.size(), 1u);
  EXPECT_EQ(sections[0].virtual_address, 0x400080u);
  EXPECT_EQ(sections[0].bytes, (std::vector<std::uint8_t>{0x90, 0x90, 0xC3}));
}

TEST(ObjectLoader, PeVirtualAddressesIncludeImageBase) {
  const auto image = build_pe({{".text", 0x10000400, {0x48, 0x83, 0xE9, 0x01, 0x75, 0xFA}, true},
                               {".data", 0x10002000, {0, 0}, false}},
                              0x10000000);
  const auto sections = load_sections(image);
  ASSERT_EQ(sections.size(), 1u);
  EXPECT_EQ(sections[0].virtual_address, 0x10000400u);
  EXPECT_EQ(sections[0].bytes.size(), 6u);
}

TEST(ObjectLoader, FunctionSymbolsSortedByAddress) {
  ElfOptions options;
  options.symbols = {{"zeta", 0x401010, 4}, {"alpha", 0x401000, 16}};
  const auto image = build_elf64({{".text", 0x401000, std::vector<std::uint8_t>(20, 0x90), true}},
                                 options);
  const auto symbols = load_function_symbols(image);
  ASSERT_EQ(symbols.size(), 2u);
  EXPECT_EQ(symbols[0].name, "alpha");
  EXPECT_EQ(symbols[0].address, 0x401000u);
  EXPECT_EQ(symbols[1].name, "zeta");
  EXPECT_EQ(symbols[1].size, 4u);
}

TEST(ObjectLoader, LoadingIsDeterministic) {
  const auto image = read_file(kFixtures / "nop2_pe.exe");
  const auto a = load_sections(image);
  const auto b = load_sections(image);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].bytes, b[i].bytes);
    EXPECT_EQ(a[i].virtual_address, b[i].virtual_address);
  }
}

TEST(ObjectLoader, MissingFileIsAnIoError) {
  try {
    load_sections(kFixtures / "no-such-file.elf");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
