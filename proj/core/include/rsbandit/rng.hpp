#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rsb {

/// SplitMix64 finalizer folded over a list of words. Used to derive
/// independent seeds from (master seed, stream id, ...) tuples.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words);

/// Hash of a string for seed derivation (FNV-1a, platform independent).
std::uint64_t hash_name(const char* text);

/// Substream identifiers used by the simulator and agents. Keeping chain
/// and reward draws on separate streams means the hidden-state path under
/// a fixed seed does not depend on the arms the agent pulls.
enum class Stream : std::uint64_t {
  Chain = 1,
  Reward = 2,
  Agent = 3,
  Planner = 4,
  Spectral = 5,
};

/// Seeded pseudo-random stream with platform-independent draws.
///
/// The engine is std::mt19937_64 (fully specified by the standard); all
/// conversions to doubles and integers are done here rather than through
/// <random> distributions, whose output is implementation defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t seed, Stream stream);

  /// Child stream whose seed is derived from this stream's seed and `id`.
  RngStream split(std::uint64_t id) const;
  RngStream split(Stream stream) const { return split(static_cast<std::uint64_t>(stream)); }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n).
  int uniform_int(int n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller.
  double normal();
  /// Index drawn from an (unnormalized, nonnegative) weight vector.
  template <typename Weights>
  int categorical(const Weights& weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = uniform() * total;
    for (int i = 0; i < n; ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rsb
