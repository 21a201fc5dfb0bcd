#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rsbandit/model.hpp"

namespace rsb {

/// Bayes filter followed by one-step prediction through P:
///   b'(m) = sum_m' P(m', m) L(m') b(m') / sum_m'' L(m'') b(m''),
/// with L(m) = mu(m, arm)^r (1 - mu(m, arm))^(1 - r).
/// Every output component is at least epsilon(model).
Belief belief_update(const HmmBanditModel& model, const Belief& b, int arm, int reward);

/// Allocation-free kernel behind belief_update. `out` must not alias `b`.
void belief_update_into(const HmmBanditModel& model, std::span<const double> b, int arm, int reward,
                        std::span<double> out);

/// Expected reward of `arm` under belief `b`: sum_m mu(m, arm) b(m).
double expected_reward(const HmmBanditModel& model, const Belief& b, int arm);
double expected_reward(const HmmBanditModel& model, std::span<const double> b, int arm);

struct BeliefHistory {
  std::vector<ArmReward> steps;
  /// beliefs[t] is the belief before step t; size() == steps.size() + 1.
  std::vector<Belief> beliefs;

  /// Columns: t, b1..bM, arm, reward (1-based arm; the final row has no pull).
  void write_csv(std::ostream& out) const;
};

/// Replays a full action/reward history through belief_update from `initial`.
BeliefHistory replay_beliefs(const HmmBanditModel& model, const Belief& initial, std::span<const ArmReward> history);

/// Same recursion as replay_beliefs, returning only the final belief.
Belief replay_final_belief(const HmmBanditModel& model, const Belief& initial, std::span<const ArmReward> history);

/// Constants bounding the belief error induced by parameter error:
///   |b_hat_t - b_t|_1 <= l1 * |mu_hat - mu|_1 + l2 * |P_hat - P|_F.
struct BeliefErrorConstants {
  double l1 = 0.0;
  double l2 = 0.0;
};

BeliefErrorConstants belief_error_constants(const HmmBanditModel& model);

/// Forgetting rate of the filter and its prefactor:
///   |b_t - b'_t|_1 <= prefactor * rate^(t-1) * |b_1 - b'_1|_1.
struct ForgettingConstants {
  double rate = 0.0;
  double prefactor = 0.0;
};

ForgettingConstants forgetting_constants(double epsilon);

}  // namespace rsb
