#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsbandit/linalg.hpp"

namespace rsb {

enum class Phase : std::uint8_t { Explore, Exploit, Play };

std::string_view to_string(Phase phase);

struct StepRecord {
  std::size_t t = 0;  ///< 1-based period
  int episode = 0;    ///< 1-based SEEU episode, 0 for baselines
  Phase phase = Phase::Play;
  int arm = 0;        ///< 0-based
  int reward = 0;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Per-episode SEEU artifacts. Matrices are empty when the episode ended
/// before its exploitation phase or the estimator fell back.
struct EpisodeRecord {
  int k = 0;
  std::size_t explore_first = 0;
  std::size_t explore_last = 0;   ///< inclusive; < explore_first when empty
  std::size_t exploit_first = 0;
  std::size_t exploit_last = 0;
  std::size_t estimator_samples = 0;  ///< exploration samples fed to the estimator
  std::size_t n_triples = 0;
  double delta_k = 0.0;
  Matrix mu_hat;
  Matrix p_hat;
  double radius_mu = 0.0;
  double radius_p = 0.0;
  Matrix mu_opt;
  Matrix p_opt;
  double rho_k = 0.0;
  double planner_residual = 0.0;
  int planner_iterations = 0;
  int candidates_evaluated = 0;
  int candidates_skipped = 0;
  bool estimated = false;
  bool fallback = false;
  std::string note;
};

struct RunLog {
  int states = 0;  ///< width of the belief rows (0 when beliefs are not tracked)
  int arms = 0;
  std::vector<StepRecord> steps;
  /// Row-major, steps.size() x states: belief before each step under the
  /// agent's current working model.
  std::vector<double> beliefs;
  std::vector<EpisodeRecord> episodes;
  std::vector<std::string> warnings;

  std::size_t horizon() const noexcept { return steps.size(); }
  std::span<const double> belief(std::size_t index) const {
    return {beliefs.data() + index * static_cast<std::size_t>(states), static_cast<std::size_t>(states)};
  }
  double total_reward() const;

  /// Columns: t, episode, phase, arm (1-based), reward, b1..bM.
  void write_steps_csv(std::ostream& out) const;
  /// One row per episode with flattened (row-major) parameter matrices.
  void write_episodes_csv(std::ostream& out) const;
};

/// Cumulative regret c_t = t * rho_star - sum_{s <= t} r_s, for t = 1..T.
std::vector<double> regret(const RunLog& log, double rho_star);

}  // namespace rsb
