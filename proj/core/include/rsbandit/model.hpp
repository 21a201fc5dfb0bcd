#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rsbandit/linalg.hpp"
#include "rsbandit/rng.hpp"

namespace rsb {

/// Row sums of a transition matrix must be within this of 1.
inline constexpr double kStochasticTolerance = 1e-12;
/// Belief components must sum to 1 within this.
inline constexpr double kBeliefTolerance = 1e-10;

/// Regime-switching Bernoulli bandit: a hidden Markov chain with transition
/// matrix P (M x M) modulating the Bernoulli means mu (M x I) of every arm.
///
/// Construction enforces only the structural invariants (shapes, row
/// stochasticity, means strictly inside (0, 1)); the identifiability
/// assumptions are checked by validate_model(). Estimated models inside the
/// learner go through the structural constructor only.
class HmmBanditModel {
 public:
  HmmBanditModel(Matrix transition, Matrix means);

  int states() const noexcept { return static_cast<int>(transition_.rows()); }
  int arms() const noexcept { return static_cast<int>(means_.cols()); }
  /// Observation alphabet size: one symbol per (arm, reward) pair.
  int observations() const noexcept { return 2 * arms(); }

  const Matrix& transition() const noexcept { return transition_; }
  const Matrix& means() const noexcept { return means_; }
  double transition(int from, int to) const { return transition_(from, to); }
  double mean(int state, int arm) const { return means_(state, arm); }

  /// Smallest transition probability.
  double epsilon() const noexcept { return epsilon_; }

 private:
  Matrix transition_;
  Matrix means_;
  double epsilon_ = 0.0;
};

struct ModelDiagnostics {
  double epsilon = 0.0;
  double abs_det_transition = 0.0;
  double min_singular_means = 0.0;
};

ModelDiagnostics diagnose(const HmmBanditModel& model);

/// Full validation: structural invariants plus invertible P, full row rank
/// mu and strictly positive transition entries. Rows are renormalized only
/// when already within kStochasticTolerance of summing to one.
HmmBanditModel validate_model(Matrix transition, Matrix means);

/// Probability vector over hidden states.
class Belief {
 public:
  /// Throws InvalidArgument unless nonnegative and summing to 1.
  explicit Belief(Vector probabilities);

  static Belief uniform(int states);
  static Belief point_mass(int states, int state);
  /// Skips validation; the caller guarantees the simplex invariant.
  static Belief trusted(Vector probabilities);

  int size() const noexcept { return static_cast<int>(p_.size()); }
  double operator[](int m) const { return p_(m); }
  const Vector& vector() const noexcept { return p_; }
  std::span<const double> span() const noexcept { return {p_.data(), static_cast<std::size_t>(p_.size())}; }

 private:
  struct TrustedTag {};
  Belief(Vector probabilities, TrustedTag) : p_(std::move(probabilities)) {}

  Vector p_;
};

/// One pull: 0-based arm and binary reward.
struct ArmReward {
  int arm = 0;
  int reward = 0;

  friend bool operator==(const ArmReward&, const ArmReward&) = default;
};

/// Index of an (arm, reward) pair in the 2I-symbol observation alphabet,
/// 0-based: s = 2 * arm + reward.
struct ObservationIndex {
  int value = 0;

  int one_based() const noexcept { return value + 1; }
  friend bool operator==(const ObservationIndex&, const ObservationIndex&) = default;
};

ObservationIndex encode_observation(int arm, int reward, int num_arms);
ArmReward decode_observation(ObservationIndex s, int num_arms);

/// Sampled path. Hidden states are recorded for diagnostics only.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> arms;
  std::vector<std::uint8_t> rewards;

  std::size_t size() const noexcept { return arms.size(); }
};

/// Stationary distribution w with wP = w, from the linear system.
/// Throws NoUniqueStationary when the system is numerically singular.
Belief stationary_distribution(const Matrix& transition);

/// Ground-truth simulator. Owns the hidden chain; the caller sees only
/// rewards (hidden_state() exists for reference policies and diagnostics).
class Environment {
 public:
  Environment(const HmmBanditModel& model, const Belief& initial, std::uint64_t seed);

  /// Pull `arm` at the current period and advance the chain.
  int pull(int arm);

  int hidden_state() const noexcept { return state_; }
  std::size_t time() const noexcept { return t_; }
  const HmmBanditModel& model() const noexcept { return model_; }

 private:
  HmmBanditModel model_;
  RngStream chain_;
  RngStream rewards_;
  int state_ = 0;
  std::size_t t_ = 0;
};

/// Arm chooser for sample_trajectory: sees the path so far and an agent stream.
using ArmPolicy = std::function<int(const Trajectory& history, RngStream& rng)>;

ArmPolicy uniform_arm_policy(int num_arms);
ArmPolicy fixed_sequence_policy(std::vector<int> arms);

/// Simulate T periods. The initial state is drawn from `initial`
/// (default: the stationary distribution of P).
Trajectory sample_trajectory(const HmmBanditModel& model, const ArmPolicy& policy, std::size_t horizon,
                             std::uint64_t seed, const std::optional<Belief>& initial = std::nullopt);

}  // namespace rsb
