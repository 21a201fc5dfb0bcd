#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rsbandit/model.hpp"
#include "rsbandit/rng.hpp"
#include "rsbandit/run_log.hpp"

namespace rsb {

/// Decision interface for state-blind learners: a policy sees nothing but
/// its own arms and rewards.
class BanditPolicy {
 public:
  virtual ~BanditPolicy() = default;
  virtual int select(RngStream& rng) = 0;
  virtual void observe(int arm, int reward) = 0;
};

/// Plays every arm once, then explores uniformly with probability epsilon
/// and otherwise picks the best empirical mean (ties to the lower index).
class EpsilonGreedy final : public BanditPolicy {
 public:
  EpsilonGreedy(int arms, double epsilon);
  int select(RngStream& rng) override;
  void observe(int arm, int reward) override;

 private:
  int arms_;
  double epsilon_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
  std::size_t plays_ = 0;
};

/// Sliding-window UCB: index mean_w(i) + B sqrt(xi log(min(n, w)) / N_w(i))
/// over the last w observations (global window), unplayed arms first.
class SlidingWindowUcb final : public BanditPolicy {
 public:
  SlidingWindowUcb(int arms, std::size_t window, double xi = 0.6, double bound = 1.0);
  int select(RngStream& rng) override;
  void observe(int arm, int reward) override;

 private:
  int arms_;
  std::size_t window_;
  double xi_;
  double bound_;
  std::deque<std::pair<int, int>> recent_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
  std::size_t plays_ = 0;
};

/// UCB with the same index but over the whole history.
class Ucb final : public BanditPolicy {
 public:
  explicit Ucb(int arms, double xi = 0.6, double bound = 1.0);
  int select(RngStream& rng) override;
  void observe(int arm, int reward) override;

 private:
  int arms_;
  double xi_;
  double bound_;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
  std::size_t plays_ = 0;
};

/// Exp3.S with uniform mixing gamma and weight-sharing drift alpha. Weights
/// are renormalized to sum one after every update.
class Exp3S final : public BanditPolicy {
 public:
  Exp3S(int arms, double gamma, double alpha);
  int select(RngStream& rng) override;
  void observe(int arm, int reward) override;

  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& probabilities() const noexcept { return probs_; }

 private:
  void refresh();

  int arms_;
  double gamma_;
  double alpha_;
  std::vector<double> weights_;
  std::vector<double> probs_;
};

/// gamma = min(1, sqrt(I (L log(I T) + e) / ((e - 1) T))), alpha = 1/T.
double exp3s_gamma(int arms, std::size_t horizon, double hardness);
double exp3s_alpha(std::size_t horizon);

enum class BaselineKind { EpsilonGreedy, SlidingWindowUcb, Ucb, Exp3S, BestFixedArm, FullInfoOracle };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::EpsilonGreedy;
  double epsilon = 0.1;
  /// Sliding window; 0 selects T^(2/3).
  std::size_t window = 0;
  double ucb_xi = 0.6;
  double ucb_bound = 1.0;
  /// Exp3.S parameters; negative values select the defaults from L = T.
  double gamma = -1.0;
  double alpha = -1.0;
  double hardness = -1.0;
};

void validate_config(const BaselineConfig& config);

/// argmax_i sum_m omega(m) mu(m, i) under the stationary distribution.
int best_fixed_arm(const HmmBanditModel& model);

/// Long-run reward of the hidden-state oracle: sum_m omega(m) max_i mu(m, i).
double full_information_value(const HmmBanditModel& model);

/// Long-run reward of always playing `arm`.
double fixed_arm_value(const HmmBanditModel& model, int arm);

std::unique_ptr<BanditPolicy> make_bandit_policy(const BaselineConfig& config, int arms, std::size_t horizon);

RunLog run_baseline(const HmmBanditModel& truth, const BaselineConfig& config, std::size_t horizon,
                    std::uint64_t seed);

}  // namespace rsb
