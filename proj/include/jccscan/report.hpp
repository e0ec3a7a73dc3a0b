#pragma once

#include "jccscan/fusion_model.hpp"
#include "jccscan/placement.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jccscan {

/// Largest forward shift the padding advisor may propose; matches the
/// assembler's per-instruction prefix budget.
inline constexpr unsigned kMaxPrefixPadding = 5;

struct PairFinding {
  std::uint64_t first_address = 0;
  std::uint64_t jump_address = 0;
  std::string first_mnemonic;
  std::string jump_mnemonic;
  PlacementClass placement = PlacementClass::fast;
  bool terminates_on_boundary = false;
  std::optional<unsigned> suggested_padding; // only for slow pairs
  std::optional<std::string> function;

  friend bool operator==(const PairFinding &, const PairFinding &) = default;
};

struct ReportTotals {
  std::uint64_t cond_jump_total = 0;
  std::uint64_t fusible_pair_total = 0;
  std::uint64_t no_mfuse_count = 0;
  std::uint64_t no_ucache_count = 0;
  std::uint64_t bytes_skipped = 0;

  ReportTotals &operator+=(const ReportTotals &other);
  friend bool operator==(const ReportTotals &, const ReportTotals &) = default;
};

/// Per-binary statistics. Percentages always divide by every conditional
/// jump in the binary, fusible or not.
struct BinaryReport {
  std::string path;
  std::uint64_t cond_jump_total = 0;
  std::uint64_t fusible_pair_total = 0;
  std::uint64_t no_mfuse_count = 0;
  std::uint64_t no_ucache_count = 0;
  double no_mfuse_pct = 0.0;
  double no_ucache_pct = 0.0;
  std::uint64_t bytes_skipped = 0;
  std::vector<PairFinding> findings;

  ReportTotals totals() const;
  friend bool operator==(const BinaryReport &, const BinaryReport &) = default;
};

struct CorpusReport {
  std::vector<BinaryReport> binaries;
  ReportTotals totals;
  double no_mfuse_pct = 0.0;
  double no_ucache_pct = 0.0;

  friend bool operator==(const CorpusReport &, const CorpusReport &) = default;
};

double percent_of(std::uint64_t count, std::uint64_t total);

struct AnalyzeOptions {
  bool per_function = false;
};

/// Full pipeline over an in-memory image. Findings list every slow pair plus
/// fast pairs whose jump ends on an exclusion boundary.
BinaryReport analyze_image(std::span<const std::uint8_t> image, std::string path,
                           const ArchProfile &profile, const AnalyzeOptions &options = {});

BinaryReport analyze_binary(const std::filesystem::path &path, const ArchProfile &profile,
                            const AnalyzeOptions &options = {});

CorpusReport aggregate(std::span<const BinaryReport> reports);
CorpusReport merge(const CorpusReport &a, const CorpusReport &b);

/// Smallest forward shift in 1..kMaxPrefixPadding that makes the pair fast,
/// or nullopt. Throws Error{precondition} if the pair is already fast.
std::optional<unsigned> suggest_padding(const PairGeometry &geometry, const ArchProfile &profile);

enum class OutputFormat { json, csv, text };

std::optional<OutputFormat> parse_output_format(std::string_view text);

std::string render(const BinaryReport &report, OutputFormat format);
std::string render(const CorpusReport &report, OutputFormat format);

nlohmann::ordered_json to_json(const BinaryReport &report);
nlohmann::ordered_json to_json(const CorpusReport &report);
BinaryReport binary_report_from_json(const nlohmann::json &j);
CorpusReport corpus_report_from_json(const nlohmann::json &j);

} // namespace jccscan
