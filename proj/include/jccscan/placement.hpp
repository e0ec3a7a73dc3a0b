#pragma once

#include "jccscan/fusion_model.hpp"
#include "jccscan/insn_stream.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string_view>

namespace jccscan {

enum class PlacementClass { fast, no_mfuse, no_ucache };

std::string_view to_string(PlacementClass c);
std::optional<PlacementClass> parse_placement_class(std::string_view text);

/// Where a (first instruction, jump) pair sits and how long its halves are.
struct PairGeometry {
  std::uint64_t first_address = 0;
  unsigned first_len = 0;
  unsigned jump_len = 0;

  std::uint64_t jump_address() const { return first_address + first_len; }
  std::uint64_t last_byte() const { return first_address + first_len + jump_len - 1; }
  PairGeometry shifted(std::uint64_t by) const { return {first_address + by, first_len, jump_len}; }
};

PairGeometry geometry_of(const AdjacentPair &pair);

/// noMFuse when the jump starts on a cache-line boundary; otherwise noUCache
/// when the pair's first byte and the jump's last byte fall in different
/// exclusion blocks; otherwise fast. No fusibility check.
PlacementClass classify_geometry(const ArchProfile &profile, const PairGeometry &g);

/// Throws Error{precondition} when the pair is not fusible under `profile`.
PlacementClass classify(const ArchProfile &profile, const AdjacentPair &pair);

/// The jump's last byte is the last byte of an exclusion block. Diagnostic
/// only; such pairs still classify as fast when they do not cross.
bool terminates_on_boundary(const ArchProfile &profile, const PairGeometry &g);

struct OffsetAnalysis {
  unsigned first_len = 0;
  unsigned jump_len = 0;
  std::set<unsigned> no_mfuse_offsets;
  std::set<unsigned> no_ucache_offsets;
  std::set<unsigned> fast_offsets;
};

/// Buckets every offset of the first instruction within a cache line by
/// classifying the pair there. Throws Error{geometry_out_of_range} unless
/// 1 <= first_len, 1 <= jump_len and first_len + jump_len <= exclusion_boundary.
OffsetAnalysis slow_offsets(unsigned first_len, unsigned jump_len, const ArchProfile &profile);

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Fraction reduced() const;
  friend bool operator==(const Fraction &a, const Fraction &b) {
    return a.num * b.den == b.num * a.den;
  }
};

struct ProbabilityBounds {
  Fraction lower;
  Fraction upper;
};

/// Closed-form noUCache probability range over pair lengths
/// [pair_len_min, pair_len_max]: (2p - 3) / 64 at each end. Throws
/// Error{range} unless 2 <= min <= max <= 32.
ProbabilityBounds probability_bounds(unsigned pair_len_min, unsigned pair_len_max);

/// noMFuse probability for any admissible geometry: one offset per line.
Fraction no_mfuse_probability(const ArchProfile &profile);

} // namespace jccscan
