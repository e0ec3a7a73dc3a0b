#include "commands.hpp"

#include "jccscan/benchgen.hpp"
#include "jccscan/covert_sim.hpp"
#include "jccscan/error.hpp"
#include "jccscan/fusion_model.hpp"
#include "jccscan/object_loader.hpp"
#include "jccscan/placement.hpp"
#include "jccscan/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace jccscan::cli {

namespace {

bool has_binary_magic(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::uint8_t magic[4] = {};
  in.read(reinterpret_cast<char *>(magic), sizeof magic);
  return sniff_format(std::span(magic, static_cast<std::size_t>(in.gcount()))).has_value();
}

struct Discovery {
  std::map<std::string, fs::path> files; // canonical -> display path
  std::set<std::string> visited_dirs;
};

std::string canonical_key(const fs::path &p) {
  std::error_code ec;
  auto c = fs::weakly_canonical(p, ec);
  return ec ? p.string() : c.string();
}

void add_file(Discovery &d, const fs::path &p) {
  d.files.emplace(canonical_key(p), p);
}

// Symlinked directories are followed at most one level deep per chain.
void walk(Discovery &d, const fs::path &dir, unsigned symlink_budget) {
  if (!d.visited_dirs.insert(canonical_key(dir)).second)
    return;
  std::error_code ec;
  fs::directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec);
  if (ec) {
    std::cerr << "jccscan: cannot read directory " << dir.string() << ": " << ec.message() << '\n';
    return;
  }
  std::vector<fs::directory_entry> entries;
  for (; it != fs::directory_iterator(); it.increment(ec)) {
    if (ec)
      break;
    entries.push_back(*it);
  }
  std::sort(entries.begin(), entries.end());
  for (const auto &entry : entries) {
    std::error_code sec;
    const bool is_link = entry.is_symlink(sec);
    if (entry.is_directory(sec)) {
      if (!is_link)
        walk(d, entry.path(), symlink_budget);
      else if (symlink_budget > 0)
        walk(d, entry.path(), symlink_budget - 1);
    } else if (entry.is_regular_file(sec) && has_binary_magic(entry.path())) {
      add_file(d, entry.path());
    }
  }
}

std::vector<fs::path> discover(const std::vector<std::string> &args, std::vector<std::string> &errors) {
  Discovery d;
  for (const auto &arg : args) {
    const fs::path p(arg);
    std::error_code ec;
    if (fs::is_directory(p, ec))
      walk(d, p, 1);
    else if (fs::exists(p, ec))
      add_file(d, p);
    else
      errors.push_back(arg + ": no such file or directory");
  }
  std::vector<fs::path> out;
  for (const auto &[key, display] : d.files)
    out.push_back(display);
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_offsets(const std::set<unsigned> &offsets) {
  std::string s = "{";
  bool first = true;
  for (unsigned o : offsets) {
    s += (first ? "" : ",") + std::to_string(o);
    first = false;
  }
  return s + "}";
}

std::string percent4(const Fraction &f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f%%", 100.0 * f.value());
  return buf;
}

std::string fraction_text(const Fraction &f) {
  return std::to_string(f.num) + "/" + std::to_string(f.den);
}

bool write_file(const std::string &path, const void *data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    return false;
  out.write(static_cast<const char *>(data), static_cast<std::streamsize>(size));
  return static_cast<bool>(out);
}

} // namespace

int cmd_analyze(const std::vector<std::string> &paths, const CliConfig &config) {
  ArchProfile profile;
  try {
    profile = resolve_profile(config.profile);
  } catch (const Error &e) {
    std::cerr << "jccscan: " << e.what() << '\n';
    return kExitError;
  }
  const auto format = parse_output_format(config.output_format).value_or(OutputFormat::text);

  std::vector<std::string> errors;
  const auto files = discover(paths, errors);

  std::vector<std::optional<BinaryReport>> results(files.size());
  std::vector<std::string> file_errors(files.size());
  std::atomic<std::size_t> next{0};
  const AnalyzeOptions options{config.per_function};
  const auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        results[i] = analyze_binary(files[i], profile, options);
      } catch (const Error &e) {
        file_errors[i] = files[i].string() + ": " + std::string(to_string(e.kind())) + ": " + e.what();
      } catch (const std::exception &e) {
        file_errors[i] = files[i].string() + ": " + e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(files.size())));
    for (unsigned t = 0; t < n; ++t)
      pool.emplace_back(worker);
  }

  for (const auto &e : errors)
    std::cerr << "jccscan: " << e << '\n';
  std::vector<BinaryReport> reports;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (results[i])
      reports.push_back(std::move(*results[i]));
    else
      std::cerr << "jccscan: skipped " << file_errors[i] << '\n';
  }
  if (reports.empty()) {
    std::cerr << "jccscan: no analyzable binaries\n";
    return kExitError;
  }

  const auto corpus = aggregate(reports);
  std::cout << render(corpus, format);
  std::cout.flush();

  if (config.fail_threshold &&
      corpus.no_mfuse_pct + corpus.no_ucache_pct > *config.fail_threshold) {
    std::cerr << "jccscan: slow-path conditional jumps exceed " << *config.fail_threshold
              << "% threshold\n";
    return kExitThreshold;
  }
  return kExitOk;
}

int cmd_prob(unsigned first_len, unsigned jump_len, const CliConfig &config) {
  try {
    const auto profile = resolve_profile(config.profile);
    const auto analysis = slow_offsets(first_len, jump_len, profile);
    const std::int64_t line = profile.cache_line;
    const Fraction mfuse{static_cast<std::int64_t>(analysis.no_mfuse_offsets.size()), line};
    const Fraction ucache{static_cast<std::int64_t>(analysis.no_ucache_offsets.size()), line};
    const Fraction fast{static_cast<std::int64_t>(analysis.fast_offsets.size()), line};

    if (config.output_format == "json") {
      nlohmann::ordered_json j;
      j["profile"] = profile.name;
      j["first_len"] = first_len;
      j["jump_len"] = jump_len;
      j["no_mfuse_offsets"] = analysis.no_mfuse_offsets;
      j["no_ucache_offsets"] = analysis.no_ucache_offsets;
      j["fast_offsets"] = analysis.fast_offsets;
      j["no_mfuse_fraction"] = fraction_text(mfuse);
      j["no_ucache_fraction"] = fraction_text(ucache);
      j["no_mfuse_pct"] = 100.0 * mfuse.value();
      j["no_ucache_pct"] = 100.0 * ucache.value();
      std::cout << j.dump(2) << '\n';
      return kExitOk;
    }
    std::cout << "pair geometry: first " << first_len << " bytes, jump " << jump_len
              << " bytes (profile " << profile.name << ")\n"
              << "noMFuse  " << fraction_text(mfuse) << " (" << percent4(mfuse) << ")  offsets "
              << format_offsets(analysis.no_mfuse_offsets) << '\n'
              << "noµCache " << fraction_text(ucache) << " (" << percent4(ucache) << ")  offsets "
              << format_offsets(analysis.no_ucache_offsets) << '\n'
              << "fast     " << fraction_text(fast) << " (" << percent4(fast) << ")\n";
    return kExitOk;
  } catch (const Error &e) {
    std::cerr << "jccscan: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_genbench(const GenbenchArgs &args, const CliConfig &config) {
  try {
    const auto profile = resolve_profile(config.profile);
    const BenchSpec spec{args.offset, args.iterations, args.instrument};
    unsigned sub_offset = spec.offset_b;
    if (args.mode == "bytes") {
      const auto bytes = emit_loop_bytes(spec);
      const auto sidecar = loop_bytes_sidecar(spec);
      if (!write_file(args.out_path, bytes.data(), bytes.size()) ||
          !write_file(args.out_path + ".txt", sidecar.data(), sidecar.size())) {
        std::cerr << "jccscan: cannot write " << args.out_path << '\n';
        return kExitError;
      }
      sub_offset = static_cast<unsigned>(loop_sub_index(spec) % 64);
    } else {
      const auto text = emit_assembly(spec);
      if (!write_file(args.out_path, text.data(), text.size())) {
        std::cerr << "jccscan: cannot write " << args.out_path << '\n';
        return kExitError;
      }
    }
    const auto placement = classify_geometry(
        profile, PairGeometry{sub_offset, static_cast<unsigned>(kSubLength),
                              static_cast<unsigned>(kJnzLength)});
    std::cout << "wrote " << args.out_path << "\n"
              << "sub at offset " << sub_offset << ", jnz at offset " << sub_offset + kSubLength
              << ": expected placement " << to_string(placement) << '\n';
    return kExitOk;
  } catch (const Error &e) {
    std::cerr << "jccscan: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_covert(const CovertArgs &args) {
  try {
    const TimingModel model{args.base_cycles, args.slope, args.sigma, args.cpu_freq_hz};
    model.validate();
    const auto record = [&](unsigned bits) {
      const auto config = ChannelConfig::make(bits);
      const auto r = run_channel(config, model, args.trials, args.seed, args.calibration_samples);
      nlohmann::ordered_json j;
      j["bits"] = bits;
      j["trials"] = r.trials;
      j["sigma"] = args.sigma;
      j["error_rate"] = r.error_rate;
      j["mean_cycles"] = r.mean_symbol_cycles;
      j["throughput_bps"] = r.throughput_bps;
      return j;
    };

    std::vector<nlohmann::ordered_json> rows;
    if (args.sweep)
      for (unsigned k = 1; k <= 8; ++k)
        rows.push_back(record(k));
    else
      rows.push_back(record(args.bits));

    const std::string format = args.format.value_or(args.sweep ? "csv" : "json");
    if (format == "csv") {
      std::cout << "bits,trials,sigma,error_rate,mean_cycles,throughput_bps\n";
      for (const auto &j : rows) {
        char line[256];
        std::snprintf(line, sizeof line, "%u,%llu,%.6g,%.6f,%.4f,%.1f\n", j["bits"].get<unsigned>(),
                      static_cast<unsigned long long>(j["trials"].get<std::uint64_t>()),
                      j["sigma"].get<double>(), j["error_rate"].get<double>(),
                      j["mean_cycles"].get<double>(), j["throughput_bps"].get<double>());
        std::cout << line;
      }
    } else if (args.sweep) {
      std::cout << nlohmann::ordered_json(rows).dump(2) << '\n';
    } else {
      std::cout << rows.front().dump(2) << '\n';
    }
    return kExitOk;
  } catch (const Error &e) {
    std::cerr << "jccscan: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_profiles_list() {
  for (const auto &name : builtin_profile_names()) {
    const auto p = builtin_profile(name);
    std::cout << name << "  " << p.description << '\n';
  }
  return kExitOk;
}

int cmd_profiles_export(const std::string &name, const std::optional<std::string> &out_path) {
  try {
    const auto text = format_profile(builtin_profile(name));
    if (!out_path) {
      std::cout << text;
      return kExitOk;
    }
    if (!write_file(*out_path, text.data(), text.size())) {
      std::cerr << "jccscan: cannot write " << *out_path << '\n';
      return kExitError;
    }
    return kExitOk;
  } catch (const Error &e) {
    std::cerr << "jccscan: " << e.what() << '\n';
    return kExitError;
  }
}

} // namespace jccscan::cli
