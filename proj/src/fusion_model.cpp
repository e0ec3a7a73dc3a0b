#include "jccscan/fusion_model.hpp"
#include "jccscan/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace jccscan {

namespace {

using enum Condition;

// Rows of the fusible-pair table. e and b are encoding aliases of z and c,
// so they collapse onto the same canonical tags.
const ConditionSet kArithJumps = {z, c, a, l, g};
const ConditionSet kIncDecJumps = {z, l, g};
const ConditionSet kLogicJumps = {z, c, a, l, g, s, p, o};

const TraitSet kSkylakeExclusions = {OperandTrait::rip_relative_operand,
                                     OperandTrait::memory_destination,
                                     OperandTrait::immediate_and_memory_source};

ArchProfile make_skylake_family() {
  ArchProfile p;
  p.name = "skylake_family";
  p.description = "Intel Skylake-derived cores (Skylake, Kaby Lake, Coffee Lake) with the "
                  "JCC-erratum microcode update";
  p.notes = "Ice Lake shows the offset 59-63 slowdown but its uop cache appears to keep "
            "boundary-crossing pairs; use this profile for it with care.";
  p.fusible_table = {
      {"cmp", kArithJumps},    {"add", kArithJumps},  {"sub", kArithJumps},
      {"inc", kIncDecJumps},   {"dec", kIncDecJumps}, {"test", kLogicJumps},
      {"and", kLogicJumps},
  };
  p.fuse_negated_jumps = true;
  p.operand_exclusions = kSkylakeExclusions;
  return p;
}

ArchProfile make_zen2() {
  ArchProfile p;
  p.name = "zen2";
  p.description = "AMD Zen 2: fuses conditional jumps only after test and cmp. The operand "
                  "exclusions are copied from the Skylake rules (assumption, not measured).";
  p.notes = "Zen 3 fuses a wider set and still shows a two-set uop cache access for jumps "
            "at offsets 60 and 63; no separate profile.";
  p.fusible_table = {{"cmp", kArithJumps}, {"test", kLogicJumps}};
  p.fuse_negated_jumps = true;
  p.operand_exclusions = kSkylakeExclusions;
  return p;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> items;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty())
      items.push_back(item);
    if (comma == std::string_view::npos)
      break;
    s.remove_prefix(comma + 1);
  }
  return items;
}

[[noreturn]] void profile_error(std::size_t line, const std::string &what) {
  throw Error(ErrorKind::invalid_profile, "profile line " + std::to_string(line) + ": " + what);
}

unsigned parse_size(std::string_view value, std::size_t line) {
  unsigned out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || out == 0)
    profile_error(line, "expected a positive integer, got '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view value, std::size_t line) {
  if (value == "true" || value == "1" || value == "yes")
    return true;
  if (value == "false" || value == "0" || value == "no")
    return false;
  profile_error(line, "expected true/false, got '" + std::string(value) + "'");
}

} // namespace

void ArchProfile::validate() const {
  if (fetch_window == 0 || exclusion_boundary == 0 || cache_line == 0)
    throw Error(ErrorKind::invalid_profile, name + ": boundary sizes must be positive");
  if (exclusion_boundary % fetch_window != 0 || cache_line % exclusion_boundary != 0)
    throw Error(ErrorKind::invalid_profile,
                name + ": fetch_window must divide exclusion_boundary and exclusion_boundary "
                       "must divide cache_line");
}

std::vector<std::string> builtin_profile_names() { return {"skylake_family", "zen2"}; }

ArchProfile builtin_profile(std::string_view name) {
  if (name == "skylake_family")
    return make_skylake_family();
  if (name == "zen2")
    return make_zen2();
  throw Error(ErrorKind::unknown_profile, "unknown profile '" + std::string(name) + "'");
}

bool is_fusible_combination(const ArchProfile &profile, std::string_view first_mnemonic,
                            Condition jump_condition) {
  const auto row = profile.fusible_table.find(first_mnemonic);
  if (row == profile.fusible_table.end())
    return false;
  return row->second.contains(jump_condition) ||
         (profile.fuse_negated_jumps && row->second.contains(negate(jump_condition)));
}

bool is_fusible_pair(const ArchProfile &profile, const AdjacentPair &pair) {
  if (!pair.jump.cond_code)
    return false;
  return is_fusible_combination(profile, pair.first.mnemonic, *pair.jump.cond_code) &&
         !pair.first.traits.intersects(profile.operand_exclusions);
}

ArchProfile parse_profile(std::string_view text) {
  ArchProfile p;
  p.fuse_negated_jumps = true;
  bool have_name = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      profile_error(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));

    if (key == "name") {
      p.name = std::string(value);
      have_name = !value.empty();
    } else if (key == "description") {
      p.description = std::string(value);
    } else if (key == "notes") {
      p.notes = std::string(value);
    } else if (key == "fuse_negated_jumps") {
      p.fuse_negated_jumps = parse_bool(value, line_no);
    } else if (key == "operand_exclusions") {
      p.operand_exclusions = {};
      for (auto item : split_list(value)) {
        const auto trait = parse_trait(item);
        if (!trait)
          profile_error(line_no, "unknown operand trait '" + std::string(item) + "'");
        p.operand_exclusions.insert(*trait);
      }
    } else if (key == "fetch_window") {
      p.fetch_window = parse_size(value, line_no);
    } else if (key == "exclusion_boundary") {
      p.exclusion_boundary = parse_size(value, line_no);
    } else if (key == "cache_line") {
      p.cache_line = parse_size(value, line_no);
    } else if (key.starts_with("fuse.")) {
      const auto mnemonic = key.substr(5);
      if (mnemonic.empty())
        profile_error(line_no, "empty mnemonic in fuse row");
      ConditionSet set;
      for (auto item : split_list(value)) {
        const auto cc = parse_condition(item);
        if (!cc)
          profile_error(line_no, "unknown condition '" + std::string(item) + "'");
        set.insert(*cc);
      }
      p.fusible_table[std::string(mnemonic)] = set;
    } else {
      profile_error(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_name)
    throw Error(ErrorKind::invalid_profile, "profile has no name");
  p.validate();
  return p;
}

std::string format_profile(const ArchProfile &p) {
  std::ostringstream out;
  out << "# jccscan architecture profile\n";
  out << "name = " << p.name << '\n';
  if (!p.description.empty())
    out << "description = " << p.description << '\n';
  if (!p.notes.empty())
    out << "notes = " << p.notes << '\n';
  out << "fuse_negated_jumps = " << (p.fuse_negated_jumps ? "true" : "false") << '\n';
  out << "operand_exclusions = ";
  bool first = true;
  for (OperandTrait t : kAllTraits) {
    if (!p.operand_exclusions.contains(t))
      continue;
    out << (first ? "" : ", ") << to_string(t);
    first = false;
  }
  out << '\n';
  out << "fetch_window = " << p.fetch_window << '\n';
  out << "exclusion_boundary = " << p.exclusion_boundary << '\n';
  out << "cache_line = " << p.cache_line << '\n';
  for (const auto &[mnemonic, set] : p.fusible_table) {
    out << "fuse." << mnemonic << " = ";
    first = true;
    for (unsigned i = 0; i < kConditionCount; ++i) {
      const auto cc = static_cast<Condition>(i);
      if (!set.contains(cc))
        continue;
      out << (first ? "" : ", ") << to_string(cc);
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

ArchProfile load_profile_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::io, "cannot open profile " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_profile(text.str());
}

ArchProfile resolve_profile(std::string_view name_or_path) {
  for (const auto &builtin : builtin_profile_names())
    if (builtin == name_or_path)
      return builtin_profile(name_or_path);
  const std::filesystem::path path{std::string(name_or_path)};
  if (std::filesystem::is_regular_file(path))
    return load_profile_file(path);
  throw Error(ErrorKind::unknown_profile,
              "'" + std::string(name_or_path) + "' is neither a built-in profile nor a file");
}

} // namespace jccscan
