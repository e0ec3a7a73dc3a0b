#include "jccscan/report.hpp"
#include "jccscan/error.hpp"
#include "jccscan/insn_stream.hpp"
#include "jccscan/object_loader.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace jccscan {

ReportTotals &ReportTotals::operator+=(const ReportTotals &other) {
  cond_jump_total += other.cond_jump_total;
  fusible_pair_total += other.fusible_pair_total;
  no_mfuse_count += other.no_mfuse_count;
  no_ucache_count += other.no_ucache_count;
  bytes_skipped += other.bytes_skipped;
  return *this;
}

ReportTotals BinaryReport::totals() const {
  return {cond_jump_total, fusible_pair_total, no_mfuse_count, no_ucache_count, bytes_skipped};
}

double percent_of(std::uint64_t count, std::uint64_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

namespace {

const FunctionSymbol *containing_symbol(std::span<const FunctionSymbol> symbols,
                                        std::uint64_t address) {
  auto it = std::upper_bound(symbols.begin(), symbols.end(), address,
                             [](std::uint64_t a, const FunctionSymbol &s) { return a < s.address; });
  while (it != symbols.begin()) {
    --it;
    if (address < it->address + std::max<std::uint64_t>(it->size, 1))
      return &*it;
    if (it->size != 0)
      break;
  }
  return nullptr;
}

std::string library_name(const std::string &path) {
  auto name = std::filesystem::path(path).filename().string();
  return name.empty() ? path : name;
}

std::string two_decimals(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr std::string_view kCsvHeader = "library,cond_jumps,no_mfuse_pct,no_ucache_pct\n";

void csv_row(std::ostringstream &out, const BinaryReport &r) {
  out << csv_field(library_name(r.path)) << ',' << r.cond_jump_total << ','
      << two_decimals(r.no_mfuse_pct) << ',' << two_decimals(r.no_ucache_pct) << '\n';
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width)
    s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width)
    s.insert(0, width - s.size(), ' ');
  return s;
}

std::string render_text(std::span<const BinaryReport> binaries, const ReportTotals *totals,
                        double total_mfuse_pct, double total_ucache_pct) {
  std::size_t name_width = 7;
  for (const auto &b : binaries)
    name_width = std::max(name_width, library_name(b.path).size());

  std::ostringstream out;
  // "noµCache" is eight columns wide on screen but nine bytes.
  out << pad_right("Library", name_width) << "  " << pad_left("Cond. jumps", 11) << "  "
      << pad_left("Fusible", 9) << "  " << pad_left("noMFuse", 8) << "  " << " noµCache" << '\n';
  const auto row = [&](const std::string &name, const ReportTotals &t, double mf, double uc) {
    out << pad_right(name, name_width) << "  " << pad_left(std::to_string(t.cond_jump_total), 11)
        << "  " << pad_left(std::to_string(t.fusible_pair_total), 9) << "  "
        << pad_left(two_decimals(mf) + "%", 8) << "  " << pad_left(two_decimals(uc) + "%", 9)
        << '\n';
  };
  for (const auto &b : binaries)
    row(library_name(b.path), b.totals(), b.no_mfuse_pct, b.no_ucache_pct);
  if (totals) {
    out << std::string(name_width + 48, '-') << '\n';
    row("TOTAL (" + std::to_string(binaries.size()) + ")", *totals, total_mfuse_pct,
        total_ucache_pct);
  }

  std::uint64_t skipped = 0;
  for (const auto &b : binaries)
    skipped += b.bytes_skipped;
  if (skipped != 0)
    out << "\nundecodable bytes skipped: " << skipped << '\n';

  // Per-function breakdown when symbol attribution was requested.
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> by_function;
  for (const auto &b : binaries)
    for (const auto &f : b.findings)
      if (f.function && f.placement != PlacementClass::fast) {
        auto &counts = by_function[library_name(b.path) + ":" + *f.function];
        (f.placement == PlacementClass::no_mfuse ? counts.first : counts.second) += 1;
      }
  if (!by_function.empty()) {
    std::vector<std::pair<std::string, std::pair<std::uint64_t, std::uint64_t>>> ranked(
        by_function.begin(), by_function.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
      return a.second.first + a.second.second > b.second.first + b.second.second;
    });
    out << "\nSlow pairs by function (noMFuse / noµCache):\n";
    const std::size_t shown = std::min<std::size_t>(ranked.size(), 25);
    for (std::size_t i = 0; i < shown; ++i)
      out << "  " << ranked[i].first << "  " << ranked[i].second.first << " / "
          << ranked[i].second.second << '\n';
    if (ranked.size() > shown)
      out << "  ... " << (ranked.size() - shown) << " more\n";
  }
  return out.str();
}

nlohmann::ordered_json totals_json(const ReportTotals &t) {
  nlohmann::ordered_json j;
  j["cond_jump_total"] = t.cond_jump_total;
  j["fusible_pair_total"] = t.fusible_pair_total;
  j["no_mfuse_count"] = t.no_mfuse_count;
  j["no_ucache_count"] = t.no_ucache_count;
  j["bytes_skipped"] = t.bytes_skipped;
  return j;
}

PlacementClass placement_from_json(const nlohmann::json &j) {
  const auto parsed = parse_placement_class(j.get<std::string>());
  if (!parsed)
    throw Error(ErrorKind::precondition, "unknown placement class " + j.dump());
  return *parsed;
}

} // namespace

BinaryReport analyze_image(std::span<const std::uint8_t> image, std::string path,
                           const ArchProfile &profile, const AnalyzeOptions &options) {
  const auto sections = load_sections(image, FormatHint::automatic, path);
  std::vector<FunctionSymbol> symbols;
  if (options.per_function)
    symbols = load_function_symbols(image);

  BinaryReport report;
  report.path = std::move(path);
  for (const auto &section : sections) {
    const auto stream = decode_stream(section);
    report.bytes_skipped += stream.bytes_skipped;
    report.cond_jump_total += count_cond_jumps(stream.records);

    for (const auto &pair : find_adjacent_pairs(stream.records)) {
      if (!is_fusible_pair(profile, pair))
        continue;
      ++report.fusible_pair_total;
      const auto geometry = geometry_of(pair);
      const auto placement = classify(profile, pair);
      const bool on_boundary = terminates_on_boundary(profile, geometry);
      if (placement == PlacementClass::no_mfuse)
        ++report.no_mfuse_count;
      else if (placement == PlacementClass::no_ucache)
        ++report.no_ucache_count;
      else if (!on_boundary)
        continue;

      PairFinding finding;
      finding.first_address = pair.first.address;
      finding.jump_address = pair.jump.address;
      finding.first_mnemonic = pair.first.mnemonic;
      finding.jump_mnemonic = pair.jump.mnemonic;
      finding.placement = placement;
      finding.terminates_on_boundary = on_boundary;
      if (placement != PlacementClass::fast)
        finding.suggested_padding = suggest_padding(geometry, profile);
      if (const auto *sym = containing_symbol(symbols, pair.first.address))
        finding.function = sym->name;
      report.findings.push_back(std::move(finding));
    }
  }
  report.no_mfuse_pct = percent_of(report.no_mfuse_count, report.cond_jump_total);
  report.no_ucache_pct = percent_of(report.no_ucache_count, report.cond_jump_total);
  return report;
}

BinaryReport analyze_binary(const std::filesystem::path &path, const ArchProfile &profile,
                            const AnalyzeOptions &options) {
  const auto image = read_file(path);
  return analyze_image(image, path.string(), profile, options);
}

CorpusReport aggregate(std::span<const BinaryReport> reports) {
  CorpusReport corpus;
  corpus.binaries.assign(reports.begin(), reports.end());
  for (const auto &r : reports)
    corpus.totals += r.totals();
  corpus.no_mfuse_pct = percent_of(corpus.totals.no_mfuse_count, corpus.totals.cond_jump_total);
  corpus.no_ucache_pct = percent_of(corpus.totals.no_ucache_count, corpus.totals.cond_jump_total);
  return corpus;
}

CorpusReport merge(const CorpusReport &a, const CorpusReport &b) {
  CorpusReport out;
  out.binaries = a.binaries;
  out.binaries.insert(out.binaries.end(), b.binaries.begin(), b.binaries.end());
  out.totals = a.totals;
  out.totals += b.totals;
  out.no_mfuse_pct = percent_of(out.totals.no_mfuse_count, out.totals.cond_jump_total);
  out.no_ucache_pct = percent_of(out.totals.no_ucache_count, out.totals.cond_jump_total);
  return out;
}

std::optional<unsigned> suggest_padding(const PairGeometry &geometry, const ArchProfile &profile) {
  if (classify_geometry(profile, geometry) == PlacementClass::fast)
    throw Error(ErrorKind::precondition, "suggest_padding: pair is already fast");
  for (unsigned shift = 1; shift <= kMaxPrefixPadding; ++shift)
    if (classify_geometry(profile, geometry.shifted(shift)) == PlacementClass::fast)
      return shift;
  return std::nullopt;
}

std::optional<OutputFormat> parse_output_format(std::string_view text) {
  if (text == "json") return OutputFormat::json;
  if (text == "csv") return OutputFormat::csv;
  if (text == "text") return OutputFormat::text;
  return std::nullopt;
}

nlohmann::ordered_json to_json(const BinaryReport &r) {
  nlohmann::ordered_json j;
  j["path"] = r.path;
  j["cond_jump_total"] = r.cond_jump_total;
  j["fusible_pair_total"] = r.fusible_pair_total;
  j["no_mfuse_count"] = r.no_mfuse_count;
  j["no_ucache_count"] = r.no_ucache_count;
  j["no_mfuse_pct"] = r.no_mfuse_pct;
  j["no_ucache_pct"] = r.no_ucache_pct;
  j["bytes_skipped"] = r.bytes_skipped;
  auto findings = nlohmann::ordered_json::array();
  for (const auto &f : r.findings) {
    nlohmann::ordered_json jf;
    jf["first_address"] = f.first_address;
    jf["jump_address"] = f.jump_address;
    jf["first_mnemonic"] = f.first_mnemonic;
    jf["jump_mnemonic"] = f.jump_mnemonic;
    jf["class"] = to_string(f.placement);
    jf["terminates_on_boundary"] = f.terminates_on_boundary;
    jf["suggested_padding"] =
        f.suggested_padding ? nlohmann::ordered_json(*f.suggested_padding) : nullptr;
    if (f.function)
      jf["function"] = *f.function;
    findings.push_back(std::move(jf));
  }
  j["findings"] = std::move(findings);
  return j;
}

nlohmann::ordered_json to_json(const CorpusReport &r) {
  nlohmann::ordered_json j;
  auto binaries = nlohmann::ordered_json::array();
  for (const auto &b : r.binaries)
    binaries.push_back(to_json(b));
  j["binaries"] = std::move(binaries);
  j["totals"] = totals_json(r.totals);
  j["aggregate_pcts"] = {{"no_mfuse_pct", r.no_mfuse_pct}, {"no_ucache_pct", r.no_ucache_pct}};
  return j;
}

BinaryReport binary_report_from_json(const nlohmann::json &j) {
  BinaryReport r;
  r.path = j.at("path").get<std::string>();
  r.cond_jump_total = j.at("cond_jump_total").get<std::uint64_t>();
  r.fusible_pair_total = j.at("fusible_pair_total").get<std::uint64_t>();
  r.no_mfuse_count = j.at("no_mfuse_count").get<std::uint64_t>();
  r.no_ucache_count = j.at("no_ucache_count").get<std::uint64_t>();
  r.no_mfuse_pct = j.at("no_mfuse_pct").get<double>();
  r.no_ucache_pct = j.at("no_ucache_pct").get<double>();
  r.bytes_skipped = j.at("bytes_skipped").get<std::uint64_t>();
  for (const auto &jf : j.at("findings")) {
    PairFinding f;
    f.first_address = jf.at("first_address").get<std::uint64_t>();
    f.jump_address = jf.at("jump_address").get<std::uint64_t>();
    f.first_mnemonic = jf.at("first_mnemonic").get<std::string>();
    f.jump_mnemonic = jf.at("jump_mnemonic").get<std::string>();
    f.placement = placement_from_json(jf.at("class"));
    f.terminates_on_boundary = jf.at("terminates_on_boundary").get<bool>();
    if (const auto &pad = jf.at("suggested_padding"); !pad.is_null())
      f.suggested_padding = pad.get<unsigned>();
    if (jf.contains("function"))
      f.function = jf.at("function").get<std::string>();
    r.findings.push_back(std::move(f));
  }
  return r;
}

CorpusReport corpus_report_from_json(const nlohmann::json &j) {
  CorpusReport r;
  for (const auto &jb : j.at("binaries"))
    r.binaries.push_back(binary_report_from_json(jb));
  const auto &t = j.at("totals");
  r.totals.cond_jump_total = t.at("cond_jump_total").get<std::uint64_t>();
  r.totals.fusible_pair_total = t.at("fusible_pair_total").get<std::uint64_t>();
  r.totals.no_mfuse_count = t.at("no_mfuse_count").get<std::uint64_t>();
  r.totals.no_ucache_count = t.at("no_ucache_count").get<std::uint64_t>();
  r.totals.bytes_skipped = t.at("bytes_skipped").get<std::uint64_t>();
  const auto &p = j.at("aggregate_pcts");
  r.no_mfuse_pct = p.at("no_mfuse_pct").get<double>();
  r.no_ucache_pct = p.at("no_ucache_pct").get<double>();
  return r;
}

std::string render(const BinaryReport &report, OutputFormat format) {
  switch (format) {
  case OutputFormat::json:
    return to_json(report).dump(2) + "\n";
  case OutputFormat::csv: {
    std::ostringstream out;
    out << kCsvHeader;
    csv_row(out, report);
    return out.str();
  }
  case OutputFormat::text:
    return render_text(std::span(&report, 1), nullptr, 0.0, 0.0);
  }
  return {};
}

std::string render(const CorpusReport &report, OutputFormat format) {
  switch (format) {
  case OutputFormat::json:
    return to_json(report).dump(2) + "\n";
  case OutputFormat::csv: {
    std::ostringstream out;
    out << kCsvHeader;
    for (const auto &b : report.binaries)
      csv_row(out, b);
    return out.str();
  }
  case OutputFormat::text:
    return render_text(report.binaries, &report.totals, report.no_mfuse_pct,
                       report.no_ucache_pct);
  }
  return {};
}

} // namespace jccscan
