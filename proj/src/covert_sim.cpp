#include "jccscan/covert_sim.hpp"
#include "jccscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace jccscan {

std::vector<unsigned> level_weights(unsigned bits_per_symbol, unsigned word_length) {
  if (bits_per_symbol < 1 || bits_per_symbol > 8)
    throw Error(ErrorKind::range, "bits_per_symbol must be in 1..8");
  const std::uint64_t steps = (1ull << bits_per_symbol) - 1;
  if (steps > word_length)
    throw Error(ErrorKind::too_many_levels,
                std::to_string(steps + 1) + " levels do not fit in a " +
                    std::to_string(word_length) + "-bit word");
  std::vector<unsigned> weights;
  weights.reserve(steps + 1);
  for (std::uint64_t i = 0; i <= steps; ++i)
    // round-half-up of i * W / steps in integers
    weights.push_back(static_cast<unsigned>((2 * i * word_length + steps) / (2 * steps)));
  return weights;
}

ChannelConfig ChannelConfig::make(unsigned bits_per_symbol, unsigned word_length) {
  return {bits_per_symbol, word_length, jccscan::level_weights(bits_per_symbol, word_length)};
}

void ChannelConfig::validate() const {
  if (bits_per_symbol < 1 || bits_per_symbol > 8)
    throw Error(ErrorKind::range, "bits_per_symbol must be in 1..8");
  if (level_weights.size() != symbol_count())
    throw Error(ErrorKind::range, "level_weights must have 2^bits_per_symbol entries");
  if (level_weights.front() != 0 || level_weights.back() != word_length)
    throw Error(ErrorKind::range, "level_weights must span 0..word_length");
  if (std::adjacent_find(level_weights.begin(), level_weights.end(),
                         std::greater_equal<>()) != level_weights.end())
    throw Error(ErrorKind::range, "level_weights must be strictly increasing");
}

void TimingModel::validate() const {
  if (!(base_cycles >= 0.0) || !(cycles_per_slow_iter > 0.0) || !(noise_sigma >= 0.0) ||
      !(cpu_freq_hz > 0.0))
    throw Error(ErrorKind::range,
                "timing model needs base >= 0, slope > 0, sigma >= 0, frequency > 0");
}

unsigned hamming_weight(const SecretWord &word) {
  return static_cast<unsigned>(std::count(word.begin(), word.end(), true));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

void check_symbol(const ChannelConfig &config, unsigned symbol) {
  if (symbol >= config.level_weights.size())
    throw Error(ErrorKind::range, "symbol " + std::to_string(symbol) + " out of range");
}

double standard_normal(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

} // namespace

SecretWord encode(const ChannelConfig &config, unsigned symbol,
                  std::optional<std::uint64_t> seed) {
  check_symbol(config, symbol);
  const unsigned weight = config.level_weights[symbol];
  SecretWord word(config.word_length, false);
  if (!seed) {
    std::fill_n(word.begin(), weight, true);
    return word;
  }
  std::vector<unsigned> positions(config.word_length);
  std::iota(positions.begin(), positions.end(), 0u);
  std::mt19937_64 rng(*seed);
  // Partial Fisher-Yates: the first `weight` slots are a uniform subset.
  for (unsigned i = 0; i < weight; ++i) {
    std::uniform_int_distribution<unsigned> pick(i, config.word_length - 1);
    std::swap(positions[i], positions[pick(rng)]);
    word[positions[i]] = true;
  }
  return word;
}

double simulate_symbol(const TimingModel &model, const ChannelConfig &config, unsigned symbol,
                       std::uint64_t seed) {
  const unsigned slow_count = hamming_weight(encode(config, symbol));
  const double noise = model.noise_sigma == 0.0 ? 0.0 : model.noise_sigma * standard_normal(seed);
  return model.base_cycles + model.cycles_per_slow_iter * slow_count + noise;
}

std::vector<double> calibrate(const TimingModel &model, const ChannelConfig &config,
                              unsigned samples_per_level, std::uint64_t seed) {
  if (samples_per_level < 1)
    throw Error(ErrorKind::range, "samples_per_level must be at least 1");
  std::vector<double> centroids(config.symbol_count(), 0.0);
  for (unsigned symbol = 0; symbol < config.symbol_count(); ++symbol) {
    const std::uint64_t level_seed = derive_seed(seed, symbol);
    double sum = 0.0;
    for (unsigned i = 0; i < samples_per_level; ++i)
      sum += simulate_symbol(model, config, symbol, derive_seed(level_seed, i));
    centroids[symbol] = sum / samples_per_level;
  }
  return centroids;
}

unsigned decode_nearest(std::span<const double> centroids, double cycles) {
  unsigned best = 0;
  double best_distance = std::abs(cycles - centroids[0]);
  for (unsigned i = 1; i < centroids.size(); ++i) {
    const double d = std::abs(cycles - centroids[i]);
    if (d < best_distance) {
      best = i;
      best_distance = d;
    }
  }
  return best;
}

double throughput_bps(unsigned bits_per_symbol, double cpu_freq_hz, double mean_symbol_cycles) {
  return bits_per_symbol * cpu_freq_hz / mean_symbol_cycles;
}

ChannelResult run_channel(const ChannelConfig &config, const TimingModel &model,
                          std::uint64_t trials, std::uint64_t seed, unsigned calibration_samples) {
  config.validate();
  model.validate();
  if (trials < 1)
    throw Error(ErrorKind::range, "trials must be at least 1");

  // Stream 0 trains the receiver; trial t uses stream t + 1.
  const auto centroids = calibrate(model, config, calibration_samples, derive_seed(seed, 0));

  std::uint64_t errors = 0;
  double total_cycles = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, t + 1);
    std::mt19937_64 rng(trial_seed);
    std::uniform_int_distribution<unsigned> pick(0, config.symbol_count() - 1);
    const unsigned sent = pick(rng);
    const double cycles = simulate_symbol(model, config, sent, derive_seed(trial_seed, 0));
    total_cycles += cycles;
    if (decode_nearest(centroids, cycles) != sent)
      ++errors;
  }

  ChannelResult result;
  result.trials = trials;
  result.error_rate = static_cast<double>(errors) / static_cast<double>(trials);
  result.mean_symbol_cycles = total_cycles / static_cast<double>(trials);
  result.throughput_bps =
      throughput_bps(config.bits_per_symbol, model.cpu_freq_hz, result.mean_symbol_cycles);
  return result;
}

} // namespace jccscan
