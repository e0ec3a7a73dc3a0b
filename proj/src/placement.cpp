#include "jccscan/placement.hpp"
#include "jccscan/error.hpp"

#include <numeric>

namespace jccscan {

namespace {
constexpr unsigned kModelLine = 64;
constexpr unsigned kMaxPairLength = 32;
} // namespace

std::string_view to_string(PlacementClass c) {
  switch (c) {
  case PlacementClass::fast: return "fast";
  case PlacementClass::no_mfuse: return "no_mfuse";
  case PlacementClass::no_ucache: return "no_ucache";
  }
  return "";
}

std::optional<PlacementClass> parse_placement_class(std::string_view text) {
  for (auto c : {PlacementClass::fast, PlacementClass::no_mfuse, PlacementClass::no_ucache})
    if (to_string(c) == text)
      return c;
  return std::nullopt;
}

PairGeometry geometry_of(const AdjacentPair &pair) {
  return {pair.first.address, pair.first.length, pair.jump.length};
}

PlacementClass classify_geometry(const ArchProfile &profile, const PairGeometry &g) {
  if (g.jump_address() % profile.cache_line == 0)
    return PlacementClass::no_mfuse;
  if (g.first_address / profile.exclusion_boundary != g.last_byte() / profile.exclusion_boundary)
    return PlacementClass::no_ucache;
  return PlacementClass::fast;
}

PlacementClass classify(const ArchProfile &profile, const AdjacentPair &pair) {
  if (!is_fusible_pair(profile, pair))
    throw Error(ErrorKind::precondition,
                "classify: " + pair.first.mnemonic + "/" + pair.jump.mnemonic +
                    " is not a fusible pair under " + profile.name);
  return classify_geometry(profile, geometry_of(pair));
}

bool terminates_on_boundary(const ArchProfile &profile, const PairGeometry &g) {
  return (g.last_byte() + 1) % profile.exclusion_boundary == 0;
}

OffsetAnalysis slow_offsets(unsigned first_len, unsigned jump_len, const ArchProfile &profile) {
  if (first_len < 1 || jump_len < 1 || first_len + jump_len > profile.exclusion_boundary)
    throw Error(ErrorKind::geometry_out_of_range,
                "pair geometry (" + std::to_string(first_len) + ", " + std::to_string(jump_len) +
                    ") must satisfy 1 <= first, 1 <= jump, first + jump <= " +
                    std::to_string(profile.exclusion_boundary));

  OffsetAnalysis out{first_len, jump_len, {}, {}, {}};
  // Any line-aligned base gives the same buckets; use one away from zero.
  const std::uint64_t base = 16ull * profile.cache_line;
  for (unsigned offset = 0; offset < profile.cache_line; ++offset) {
    switch (classify_geometry(profile, {base + offset, first_len, jump_len})) {
    case PlacementClass::no_mfuse: out.no_mfuse_offsets.insert(offset); break;
    case PlacementClass::no_ucache: out.no_ucache_offsets.insert(offset); break;
    case PlacementClass::fast: out.fast_offsets.insert(offset); break;
    }
  }
  return out;
}

Fraction Fraction::reduced() const {
  const auto g = std::gcd(num, den);
  return g == 0 ? *this : Fraction{num / g, den / g};
}

ProbabilityBounds probability_bounds(unsigned pair_len_min, unsigned pair_len_max) {
  if (pair_len_min < 2 || pair_len_min > pair_len_max || pair_len_max > kMaxPairLength)
    throw Error(ErrorKind::range, "pair lengths must satisfy 2 <= min <= max <= 32");
  // p - 1 crossing offsets per 32-byte block, two blocks per line, and one
  // of them is the noMFuse offset instead.
  const auto crossing = [](unsigned p) {
    return Fraction{2 * static_cast<std::int64_t>(p) - 3, kModelLine};
  };
  return {crossing(pair_len_min), crossing(pair_len_max)};
}

Fraction no_mfuse_probability(const ArchProfile &profile) {
  return {1, static_cast<std::int64_t>(profile.cache_line)};
}

} // namespace jccscan
