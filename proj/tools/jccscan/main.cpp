#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <thread>

using namespace jccscan::cli;

int main(int argc, char **argv) {
  CLI::App app{"jccscan: find conditional jumps whose placement defeats macro-op fusion or the "
               "uop cache"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "jccscan 0.1.0");

  CliConfig config;
  config.jobs = std::max(1u, std::thread::hardware_concurrency());

  const auto add_profile = [&](CLI::App *cmd) {
    cmd->add_option("--profile", config.profile,
                    "Architecture profile: skylake_family, zen2, or a profile file")
        ->envname("JCCSCAN_PROFILE")
        ->capture_default_str();
  };

  // analyze
  std::vector<std::string> paths;
  auto *analyze = app.add_subcommand("analyze", "Analyze ELF/PE binaries or directories of them");
  analyze->add_option("paths", paths, "Files or directories")->required();
  add_profile(analyze);
  analyze->add_option("--format", config.output_format, "json, csv or text")
      ->check(CLI::IsMember({"json", "csv", "text"}))
      ->capture_default_str();
  analyze->add_option("--jobs", config.jobs, "Files analyzed in parallel")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--fail-threshold", config.fail_threshold,
                      "Exit 2 when the corpus noMFuse + noUCache percentage exceeds this")
      ->check(CLI::Range(0.0, 100.0));
  analyze->add_flag("--per-function", config.per_function,
                    "Attribute findings to ELF function symbols");

  // prob
  unsigned first_len = 0;
  unsigned jump_len = 0;
  auto *prob = app.add_subcommand("prob", "Slow offsets and probabilities for a pair geometry");
  prob->add_option("first_len", first_len, "Length of the first instruction")->required();
  prob->add_option("jump_len", jump_len, "Length of the conditional jump")->required();
  add_profile(prob);
  prob->add_option("--format", config.output_format, "json or text")
      ->check(CLI::IsMember({"json", "text"}));

  // genbench
  GenbenchArgs gen;
  auto *genbench = app.add_subcommand("genbench", "Emit the offset-shifted loop benchmark");
  genbench->add_option("--offset", gen.offset, "Loop offset B in 0..63")
      ->required()
      ->check(CLI::Range(0u, 63u));
  genbench->add_option("--iterations", gen.iterations, "Loop iterations")
      ->capture_default_str();
  genbench->add_option("--mode", gen.mode, "asm or bytes")
      ->check(CLI::IsMember({"asm", "bytes"}))
      ->capture_default_str();
  genbench->add_option("-o,--out", gen.out_path, "Output file")->required();
  genbench->add_flag("!--no-instrument", gen.instrument, "Omit the lfence/rdtsc timing code");
  add_profile(genbench);

  // covert simulate
  CovertArgs cov;
  auto *covert = app.add_subcommand("covert", "Hamming-weight timing covert channel");
  covert->require_subcommand(1);
  auto *simulate = covert->add_subcommand("simulate", "Simulate transmissions and decode them");
  simulate->add_option("--bits", cov.bits, "Bits per symbol (1..8)")
      ->check(CLI::Range(1u, 8u))
      ->capture_default_str();
  simulate->add_option("--trials", cov.trials, "Symbols transmitted")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--sigma", cov.sigma, "Gaussian timing noise (cycles)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--seed", cov.seed, "Master RNG seed")->capture_default_str();
  simulate->add_flag("--sweep", cov.sweep, "Sweep bits per symbol over 1..8 (CSV)");
  simulate->add_option("--base", cov.base_cycles, "Cycles for a weight-0 word")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--slope", cov.slope, "Extra cycles per slow iteration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--freq", cov.cpu_freq_hz, "Core frequency in Hz")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--calibration-samples", cov.calibration_samples,
                       "Receiver training samples per level")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--format", cov.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  // profiles
  auto *profiles = app.add_subcommand("profiles", "List or export architecture profiles");
  profiles->require_subcommand(1);
  profiles->add_subcommand("list", "List built-in profiles");
  std::string export_name;
  std::optional<std::string> export_out;
  auto *exporter = profiles->add_subcommand("export", "Print a built-in profile as a file");
  exporter->add_option("name", export_name, "Profile name")->required();
  exporter->add_option("-o,--out", export_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitError;
  }

  if (analyze->parsed())
    return cmd_analyze(paths, config);
  if (prob->parsed())
    return cmd_prob(first_len, jump_len, config);
  if (genbench->parsed())
    return cmd_genbench(gen, config);
  if (simulate->parsed())
    return cmd_covert(cov);
  if (profiles->parsed()) {
    if (exporter->parsed())
      return cmd_profiles_export(export_name, export_out);
    return cmd_profiles_list();
  }
  return kExitError;
}
