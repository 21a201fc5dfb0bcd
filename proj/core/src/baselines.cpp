#include "rsbandit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rsbandit/errors.hpp"
#include "rsbandit/seeu.hpp"

namespace rsb {

namespace {

void check_arms(int arms) {
  if (arms < 1) throw Error(ErrorCode::InvalidArgument, "a bandit needs at least one arm");
}

int first_unplayed(const std::vector<std::size_t>& counts) {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) return static_cast<int>(i);
  }
  return -1;
}

int argmax_index(const std::vector<double>& values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

EpsilonGreedy::EpsilonGreedy(int arms, double epsilon)
    : arms_(arms), epsilon_(epsilon), sums_(static_cast<std::size_t>(arms), 0.0),
      counts_(static_cast<std::size_t>(arms), 0) {
  check_arms(arms);
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0, 1]");
}

int EpsilonGreedy::select(RngStream& rng) {
  if (const int unplayed = first_unplayed(counts_); unplayed >= 0) return unplayed;
  if (rng.uniform() < epsilon_) return rng.uniform_int(arms_);
  std::vector<double> means(sums_.size());
  for (std::size_t i = 0; i < means.size(); ++i) means[i] = sums_[i] / static_cast<double>(counts_[i]);
  return argmax_index(means);
}

void EpsilonGreedy::observe(int arm, int reward) {
  sums_[static_cast<std::size_t>(arm)] += reward;
  ++counts_[static_cast<std::size_t>(arm)];
  ++plays_;
}

SlidingWindowUcb::SlidingWindowUcb(int arms, std::size_t window, double xi, double bound)
    : arms_(arms), window_(window), xi_(xi), bound_(bound), sums_(static_cast<std::size_t>(arms), 0.0),
      counts_(static_cast<std::size_t>(arms), 0) {
  check_arms(arms);
  if (window < 1) throw Error(ErrorCode::InvalidArgument, "window must be >= 1");
  if (!(xi > 0.0) || !(bound > 0.0)) throw Error(ErrorCode::InvalidArgument, "UCB constants must be positive");
}

int SlidingWindowUcb::select(RngStream&) {
  if (const int unplayed = first_unplayed(counts_); unplayed >= 0) return unplayed;
  const double log_term = std::log(static_cast<double>(std::min(plays_, window_)));
  std::vector<double> index(static_cast<std::size_t>(arms_));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto n = static_cast<double>(counts_[i]);
    index[i] = sums_[i] / n + bound_ * std::sqrt(xi_ * log_term / n);
  }
  return argmax_index(index);
}

void SlidingWindowUcb::observe(int arm, int reward) {
  recent_.emplace_back(arm, reward);
  sums_[static_cast<std::size_t>(arm)] += reward;
  ++counts_[static_cast<std::size_t>(arm)];
  ++plays_;
  if (recent_.size() > window_) {
    const auto [old_arm, old_reward] = recent_.front();
    recent_.pop_front();
    sums_[static_cast<std::size_t>(old_arm)] -= old_reward;
    --counts_[static_cast<std::size_t>(old_arm)];
  }
}

Ucb::Ucb(int arms, double xi, double bound)
    : arms_(arms), xi_(xi), bound_(bound), sums_(static_cast<std::size_t>(arms), 0.0),
      counts_(static_cast<std::size_t>(arms), 0) {
  check_arms(arms);
  if (!(xi > 0.0) || !(bound > 0.0)) throw Error(ErrorCode::InvalidArgument, "UCB constants must be positive");
}

int Ucb::select(RngStream&) {
  if (const int unplayed = first_unplayed(counts_); unplayed >= 0) return unplayed;
  const double log_term = std::log(static_cast<double>(plays_));
  std::vector<double> index(static_cast<std::size_t>(arms_));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto n = static_cast<double>(counts_[i]);
    index[i] = sums_[i] / n + bound_ * std::sqrt(xi_ * log_term / n);
  }
  return argmax_index(index);
}

void Ucb::observe(int arm, int reward) {
  sums_[static_cast<std::size_t>(arm)] += reward;
  ++counts_[static_cast<std::size_t>(arm)];
  ++plays_;
}

Exp3S::Exp3S(int arms, double gamma, double alpha)
    : arms_(arms), gamma_(gamma), alpha_(alpha), weights_(static_cast<std::size_t>(arms), 1.0 / arms),
      probs_(static_cast<std::size_t>(arms), 1.0 / arms) {
  check_arms(arms);
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "Exp3.S gamma must lie in (0, 1]");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Exp3.S alpha must be >= 0");
  refresh();
}

void Exp3S::refresh() {
  for (std::size_t i = 0; i < probs_.size(); ++i) probs_[i] = (1.0 - gamma_) * weights_[i] + gamma_ / arms_;
}

int Exp3S::select(RngStream& rng) { return rng.categorical(probs_, arms_); }

void Exp3S::observe(int arm, int reward) {
  const auto a = static_cast<std::size_t>(arm);
  const double estimate = reward / probs_[a];
  // Weights sum to one before the update, so the shared term is e*alpha/I.
  const double share = std::numbers::e * alpha_ / arms_;
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double gain = i == a ? std::exp(gamma_ * estimate / arms_) : 1.0;
    weights_[i] = weights_[i] * gain + share;
    total += weights_[i];
  }
  for (double& w : weights_) w /= total;
  refresh();
}

double exp3s_gamma(int arms, std::size_t horizon, double hardness) {
  const double t = static_cast<double>(horizon);
  const double value = std::sqrt(arms * (hardness * std::log(arms * t) + std::numbers::e) / ((std::numbers::e - 1.0) * t));
  return std::min(1.0, value);
}

double exp3s_alpha(std::size_t horizon) { return 1.0 / static_cast<double>(horizon); }

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::EpsilonGreedy: return "epsilon_greedy";
    case BaselineKind::SlidingWindowUcb: return "sw_ucb";
    case BaselineKind::Ucb: return "ucb";
    case BaselineKind::Exp3S: return "exp3s";
    case BaselineKind::BestFixedArm: return "best_fixed_arm";
    case BaselineKind::FullInfoOracle: return "full_info_oracle";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  for (auto kind : {BaselineKind::EpsilonGreedy, BaselineKind::SlidingWindowUcb, BaselineKind::Ucb, BaselineKind::Exp3S,
                    BaselineKind::BestFixedArm, BaselineKind::FullInfoOracle}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown baseline kind '{}'", name));
}

void validate_config(const BaselineConfig& c) {
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0, 1]");
  if (c.gamma >= 0.0 && !(c.gamma > 0.0 && c.gamma <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  }
  if (!(c.ucb_xi > 0.0) || !(c.ucb_bound > 0.0)) throw Error(ErrorCode::InvalidArgument, "UCB constants must be positive");
}

double fixed_arm_value(const HmmBanditModel& model, int arm) {
  const Belief omega = stationary_distribution(model.transition());
  return omega.vector().dot(model.means().col(arm));
}

int best_fixed_arm(const HmmBanditModel& model) {
  int best = 0;
  for (int i = 1; i < model.arms(); ++i) {
    if (fixed_arm_value(model, i) > fixed_arm_value(model, best)) best = i;
  }
  return best;
}

double full_information_value(const HmmBanditModel& model) {
  const Belief omega = stationary_distribution(model.transition());
  return omega.vector().dot(model.means().rowwise().maxCoeff());
}

std::unique_ptr<BanditPolicy> make_bandit_policy(const BaselineConfig& c, int arms, std::size_t horizon) {
  switch (c.kind) {
    case BaselineKind::EpsilonGreedy: return std::make_unique<EpsilonGreedy>(arms, c.epsilon);
    case BaselineKind::SlidingWindowUcb: {
      const std::size_t window =
          c.window > 0 ? c.window
                       : static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(horizon), 2.0 / 3.0)));
      return std::make_unique<SlidingWindowUcb>(arms, std::max<std::size_t>(1, window), c.ucb_xi, c.ucb_bound);
    }
    case BaselineKind::Ucb: return std::make_unique<Ucb>(arms, c.ucb_xi, c.ucb_bound);
    case BaselineKind::Exp3S: {
      const double hardness = c.hardness >= 0.0 ? c.hardness : static_cast<double>(horizon);
      const double gamma = c.gamma > 0.0 ? c.gamma : exp3s_gamma(arms, horizon, hardness);
      const double alpha = c.alpha >= 0.0 ? c.alpha : exp3s_alpha(horizon);
      return std::make_unique<Exp3S>(arms, gamma, alpha);
    }
    case BaselineKind::BestFixedArm:
    case BaselineKind::FullInfoOracle: break;
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("{} is a reference policy, not a learner", to_string(c.kind)));
}

RunLog run_baseline(const HmmBanditModel& truth, const BaselineConfig& config, std::size_t horizon,
                    std::uint64_t seed) {
  validate_config(config);
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  Environment env(truth, stationary_distribution(truth.transition()), environment_seed(seed));
  RngStream agent(seed, Stream::Agent);
  RunLog log;
  log.arms = truth.arms();
  log.steps.reserve(horizon);

  std::unique_ptr<BanditPolicy> policy;
  int fixed = 0;
  if (config.kind == BaselineKind::BestFixedArm) {
    fixed = best_fixed_arm(truth);
  } else if (config.kind != BaselineKind::FullInfoOracle) {
    policy = make_bandit_policy(config, truth.arms(), horizon);
  }
  for (std::size_t t = 1; t <= horizon; ++t) {
    int arm = fixed;
    if (config.kind == BaselineKind::FullInfoOracle) {
      const auto row = truth.means().row(env.hidden_state());
      Eigen::Index best = 0;
      row.maxCoeff(&best);
      arm = static_cast<int>(best);
    } else if (policy) {
      arm = policy->select(agent);
    }
    const int reward = env.pull(arm);
    if (policy) policy->observe(arm, reward);
    log.steps.push_back({t, 0, Phase::Play, arm, reward});
  }
  return log;
}

}  // namespace rsb
