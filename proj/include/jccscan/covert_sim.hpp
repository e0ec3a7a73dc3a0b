#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace jccscan {

/// Symbol alphabet: 2^bits_per_symbol Hamming-weight levels spread over a
/// word of `word_length` secret bits.
struct ChannelConfig {
  unsigned bits_per_symbol = 1;
  unsigned word_length = 256;
  std::vector<unsigned> level_weights;

  /// Builds the uniformly spaced alphabet; throws like level_weights().
  static ChannelConfig make(unsigned bits_per_symbol, unsigned word_length = 256);

  unsigned symbol_count() const { return 1u << bits_per_symbol; }
  void validate() const;
};

/// Cycles per transmission: base + slope * (slow iterations) + N(0, sigma).
struct TimingModel {
  double base_cycles = 983.0;
  double cycles_per_slow_iter = 1.0;
  double noise_sigma = 0.0;
  double cpu_freq_hz = 4.0e9;

  void validate() const;
};

/// round(i * word_length / (2^k - 1)) for i in 0..2^k-1. Throws
/// Error{too_many_levels} when 2^k - 1 > word_length, Error{range} unless
/// 1 <= k <= 8.
std::vector<unsigned> level_weights(unsigned bits_per_symbol, unsigned word_length);

using SecretWord = std::vector<bool>;

unsigned hamming_weight(const SecretWord &word);

/// Word with Hamming weight level_weights[symbol]: lowest bit positions when
/// no seed is given, a uniformly random subset otherwise.
SecretWord encode(const ChannelConfig &config, unsigned symbol,
                  std::optional<std::uint64_t> seed = std::nullopt);

double simulate_symbol(const TimingModel &model, const ChannelConfig &config, unsigned symbol,
                       std::uint64_t seed);

/// Mean simulated cycles per symbol; one centroid per level.
std::vector<double> calibrate(const TimingModel &model, const ChannelConfig &config,
                              unsigned samples_per_level, std::uint64_t seed);

/// Nearest centroid; ties go to the lower symbol.
unsigned decode_nearest(std::span<const double> centroids, double cycles);

struct ChannelResult {
  double error_rate = 0.0;
  double mean_symbol_cycles = 0.0;
  double throughput_bps = 0.0;
  std::uint64_t trials = 0;
};

inline constexpr unsigned kDefaultCalibrationSamples = 256;

ChannelResult run_channel(const ChannelConfig &config, const TimingModel &model,
                          std::uint64_t trials, std::uint64_t seed,
                          unsigned calibration_samples = kDefaultCalibrationSamples);

double throughput_bps(unsigned bits_per_symbol, double cpu_freq_hz, double mean_symbol_cycles);

/// splitmix64 step, used to derive independent per-trial seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

} // namespace jccscan
