#pragma once

#include "jccscan/condition.hpp"
#include "jccscan/insn_stream.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace jccscan {

/// Which (first instruction, conditional jump) pairs a core fuses, plus the
/// front-end geometry the placement rules are evaluated against. Immutable
/// once built; share freely across threads.
struct ArchProfile {
  std::string name;
  std::string description;
  std::string notes;
  std::map<std::string, ConditionSet, std::less<>> fusible_table;
  bool fuse_negated_jumps = true;
  TraitSet operand_exclusions;
  unsigned fetch_window = 16;
  unsigned exclusion_boundary = 32;
  unsigned cache_line = 64;

  /// Throws Error{invalid_profile} if the geometry does not nest.
  void validate() const;

  friend bool operator==(const ArchProfile &, const ArchProfile &) = default;
};

std::vector<std::string> builtin_profile_names();

/// "skylake_family" or "zen2"; throws Error{unknown_profile} otherwise.
ArchProfile builtin_profile(std::string_view name);

bool is_fusible_pair(const ArchProfile &profile, const AdjacentPair &pair);

/// The mnemonic/condition part of the fusion rule, without operand checks.
bool is_fusible_combination(const ArchProfile &profile, std::string_view first_mnemonic,
                            Condition jump_condition);

// Profile files are flat `key = value` documents:
//
//   name = skylake_family
//   fuse_negated_jumps = true
//   operand_exclusions = rip_relative_operand, memory_destination
//   fetch_window = 16
//   exclusion_boundary = 32
//   cache_line = 64
//   fuse.cmp = z, c, a, l, g
//
// '#' starts a comment. Condition lists accept aliases (e, b, ae, ...).
ArchProfile parse_profile(std::string_view text);
std::string format_profile(const ArchProfile &profile);
ArchProfile load_profile_file(const std::filesystem::path &path);

/// A built-in name, or else a path to a profile file.
ArchProfile resolve_profile(std::string_view name_or_path);

} // namespace jccscan
