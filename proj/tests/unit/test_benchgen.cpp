#include "jccscan/benchgen.hpp"
#include "jccscan/error.hpp"
#include "jccscan/fusion_model.hpp"
#include "jccscan/insn_stream.hpp"
#include "jccscan/object_loader.hpp"
#include "jccscan/placement.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace jccscan;

namespace {

const ArchProfile kSkylake = builtin_profile("skylake_family");

bool contains(const std::string &haystack, const std::string &needle) {
  return haystack.find(needle) != std::string::npos;
}

// The sub's offset decides the bucket for the 4+2 byte loop pair.
PlacementClass bucket_for(unsigned sub_offset) {
  static const auto analysis = slow_offsets(4, 2, kSkylake);
  if (analysis.no_mfuse_offsets.contains(sub_offset))
    return PlacementClass::no_mfuse;
  if (analysis.no_ucache_offsets.contains(sub_offset))
    return PlacementClass::no_ucache;
  return PlacementClass::fast;
}

} // namespace

TEST(Benchgen, AssemblyShape) {
  const auto zero = emit_assembly({0, 200, true});
  EXPECT_TRUE(contains(zero, ".rept 0"));
  EXPECT_TRUE(contains(zero, "0xc8"));
  EXPECT_TRUE(contains(zero, ".p2align 6"));
  EXPECT_TRUE(contains(zero, "sub rcx, 1"));
  EXPECT_TRUE(contains(zero, "jnz loop"));
  EXPECT_TRUE(contains(zero, "rdtsc"));
  EXPECT_TRUE(contains(zero, "lfence"));
  EXPECT_TRUE(contains(zero, "PAPI"));
  EXPECT_TRUE(contains(emit_assembly({60, 200, true}), ".rept 60"));
  const auto bare = emit_assembly({5, 1000, false});
  EXPECT_FALSE(contains(bare, "rdtsc"));
  EXPECT_TRUE(contains(bare, "0x3e8"));
}

TEST(Benchgen, RawByteLayout) {
  const auto bytes = emit_loop_bytes({3, 200, true});
  const std::vector<std::uint8_t> expected = {0x90, 0x90, 0x90, 0x48, 0xC7, 0xC1, 0xC8, 0,
                                              0,    0,    0x48, 0x83, 0xE9, 0x01, 0x75, 0xFA};
  EXPECT_EQ(bytes, expected);
  EXPECT_EQ(loop_sub_index({3, 200, true}), 10u);
  EXPECT_EQ(loop_sub_index({60, 200, true}), 67u);
}

TEST(Benchgen, RejectsBadSpecs) {
  for (const BenchSpec &bad : {BenchSpec{64, 200, true}, BenchSpec{0, 0, true},
                               BenchSpec{0, 0x80000000u, true}}) {
    try {
      emit_loop_bytes(bad);
      ADD_FAILURE();
    } catch (const Error &e) {
      EXPECT_EQ(e.kind(), ErrorKind::range);
    }
  }
}

TEST(Benchgen, SidecarStatesAlignedBase) {
  const auto text = loop_bytes_sidecar({27, 200, true});
  EXPECT_TRUE(contains(text, "base_address = 0x0"));
  EXPECT_TRUE(contains(text, "base_alignment = 64"));
  EXPECT_TRUE(contains(text, "sub_index = 34"));
}

TEST(Benchgen, EveryOffsetRoundTripsThroughTheAnalyzer) {
  for (unsigned b = 0; b < 64; ++b) {
    const BenchSpec spec{b, 200, true};
    CodeSection section;
    section.virtual_address = 0x7f0000401000ull;
    section.bytes = emit_loop_bytes(spec);
    const auto stream = decode_stream(section);
    ASSERT_EQ(stream.bytes_skipped, 0u);
    const auto pairs = find_adjacent_pairs(stream.records);
    ASSERT_EQ(pairs.size(), 1u) << b;
    ASSERT_TRUE(is_fusible_pair(kSkylake, pairs[0]));
    EXPECT_EQ(pairs[0].first.address, section.virtual_address + loop_sub_index(spec));
    EXPECT_EQ(classify(kSkylake, pairs[0]), bucket_for((b + 7) % 64)) << "B=" << b;
  }
}

TEST(Benchgen, AssembledSourcePlacesLoopAtOffset) {
  if (std::system("command -v as >/dev/null 2>&1 && command -v ld >/dev/null 2>&1") != 0)
    GTEST_SKIP() << "binutils not available";
  const auto dir = std::filesystem::temp_directory_path() /
                   ("jccscan_bench_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  for (unsigned b : {0u, 27u, 31u, 59u, 60u, 63u}) {
    const auto src = dir / "b.s", obj = dir / "b.o", exe = dir / "b.elf";
    std::ofstream(src) << emit_assembly({b, 200, true});
    const std::string cmd = "as --64 -o " + obj.string() + " " + src.string() +
                            " && ld -N -e jcc_bench -Ttext=0x401000 -o " + exe.string() + " " +
                            obj.string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const auto sections = load_sections(exe);
    ASSERT_EQ(sections.size(), 1u);
    const auto stream = decode_stream(sections[0]);
    std::vector<AdjacentPair> subs;
    for (const auto &p : find_adjacent_pairs(stream.records))
      if (p.first.mnemonic == "sub" && p.jump.mnemonic == "jnz")
        subs.push_back(p);
    ASSERT_EQ(subs.size(), 1u);
    EXPECT_EQ(subs[0].first.address % 64, b);
    EXPECT_EQ(classify(kSkylake, subs[0]), bucket_for(b));
  }
  std::filesystem::remove_all(dir);
}
