#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rsbandit/model.hpp"
#include "rsbandit/planner.hpp"
#include "rsbandit/run_log.hpp"
#include "rsbandit/spectral.hpp"

namespace rsb {

/// Closed 1-based period range; empty when last < first.
struct Interval {
  std::size_t first = 1;
  std::size_t last = 0;
  std::size_t length() const noexcept { return last >= first ? last - first + 1 : 0; }
  bool empty() const noexcept { return last < first; }
};

struct Episode {
  int k = 0;
  Interval explore;
  Interval exploit;
};

/// Exploration of tau1 periods then exploitation of round(tau2 sqrt(k))
/// periods per episode, the last episode truncated at T.
struct EpisodeSchedule {
  int tau1 = 0;
  double tau2 = 0.0;
  std::size_t horizon = 0;
  std::vector<Episode> episodes;

  std::size_t count() const noexcept { return episodes.size(); }
  /// (T/(tau1+tau2))^(2/3) <= K <= 3 (T/tau2)^(2/3); vacuous when T < tau1 + tau2.
  bool within_count_bounds() const;
  double lower_count_bound() const;
  double upper_count_bound() const;
};

EpisodeSchedule episode_schedule(int tau1, double tau2, std::size_t horizon);

/// round(tau2 * sqrt(k)), halves away from zero.
std::size_t exploitation_length(double tau2, int k);

/// Per-episode confidence level delta / k^3.
double episode_delta(double delta, int k);

struct SeeuConfig {
  int tau1 = 100;
  double tau2 = 50.0;
  double delta = 0.05;
  double c1 = 1.0;
  double c2 = 1.0;
  /// Initial belief b1; uniform when unset.
  std::optional<Belief> initial_belief;
  /// Planner grid resolution; 0 selects default_grid_resolution(M).
  int grid_resolution = 0;
  int candidates = 64;
  PlannerOptions planner;
  SpectralOptions spectral;
};

void validate_config(const SeeuConfig& config);

struct SeeuHooks {
  /// Replaces every episode's estimate by this model with zero radii.
  std::optional<HmmBanditModel> injected_estimate;
};

/// Seed of the simulated environment for a run; shared by every agent so
/// runs with equal seeds see the same hidden-state path.
std::uint64_t environment_seed(std::uint64_t seed);

/// Runs SEEU for `horizon` periods against `truth`. The agent only sees its
/// own arms and rewards plus the number of hidden states.
RunLog run_seeu(const HmmBanditModel& truth, const SeeuConfig& config, std::size_t horizon, std::uint64_t seed,
                const SeeuHooks& hooks = {});

}  // namespace rsb
