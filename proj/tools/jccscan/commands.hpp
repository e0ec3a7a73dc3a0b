#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace jccscan::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitThreshold = 2;

struct CliConfig {
  std::string profile = "skylake_family";
  std::string output_format = "text";
  unsigned jobs = 1;
  std::optional<double> fail_threshold;
  bool per_function = false;
};

int cmd_analyze(const std::vector<std::string> &paths, const CliConfig &config);

int cmd_prob(unsigned first_len, unsigned jump_len, const CliConfig &config);

struct GenbenchArgs {
  unsigned offset = 0;
  std::uint32_t iterations = 200;
  std::string mode = "asm";
  std::string out_path;
  bool instrument = true;
};
int cmd_genbench(const GenbenchArgs &args, const CliConfig &config);

struct CovertArgs {
  unsigned bits = 5;
  std::uint64_t trials = 10000;
  double sigma = 2.0;
  std::uint64_t seed = 1;
  bool sweep = false;
  double base_cycles = 983.0;
  double slope = 1.0;
  double cpu_freq_hz = 4.0e9;
  unsigned calibration_samples = 256;
  std::optional<std::string> format;
};
int cmd_covert(const CovertArgs &args);

int cmd_profiles_list();
int cmd_profiles_export(const std::string &name, const std::optional<std::string> &out_path);

} // namespace jccscan::cli
