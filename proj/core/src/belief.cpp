#include "rsbandit/belief.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "rsbandit/errors.hpp"
#include "rsbandit/model_io.hpp"

namespace rsb {

namespace {

constexpr int kMaxStackStates = 16;

void check_arm(const HmmBanditModel& model, int arm, int reward) {
  if (arm < 0 || arm >= model.arms())
    throw Error(ErrorCode::InvalidArgument, fmt::format("arm {} outside [0, {})", arm, model.arms()));
  if (reward != 0 && reward != 1) throw Error(ErrorCode::InvalidArgument, "reward must be 0 or 1");
}

}  // namespace

void belief_update_into(const HmmBanditModel& model, std::span<const double> b, int arm, int reward,
                        std::span<double> out) {
  const int m_count = model.states();
  check_arm(model, arm, reward);
  if (static_cast<int>(b.size()) != m_count || static_cast<int>(out.size()) != m_count)
    throw Error(ErrorCode::InvalidArgument, "belief dimension does not match the model");

  std::vector<double> heap;
  double stack[kMaxStackStates];
  double* filtered = stack;
  if (m_count > kMaxStackStates) {
    heap.resize(static_cast<std::size_t>(m_count));
    filtered = heap.data();
  }

  double norm = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const double mu = model.mean(m, arm);
    filtered[m] = (reward == 1 ? mu : 1.0 - mu) * b[static_cast<std::size_t>(m)];
    norm += filtered[m];
  }
  if (!(norm > 1e-300)) throw Error(ErrorCode::DegenerateLikelihood, "observation likelihood underflowed");

  const Matrix& p = model.transition();
  for (int to = 0; to < m_count; ++to) {
    double s = 0.0;
    for (int from = 0; from < m_count; ++from) s += p(from, to) * filtered[from];
    out[static_cast<std::size_t>(to)] = s / norm;
  }
}

Belief belief_update(const HmmBanditModel& model, const Belief& b, int arm, int reward) {
  Vector out(model.states());
  belief_update_into(model, b.span(), arm, reward, {out.data(), static_cast<std::size_t>(out.size())});
  return Belief::trusted(std::move(out));
}

double expected_reward(const HmmBanditModel& model, std::span<const double> b, int arm) {
  double s = 0.0;
  for (int m = 0; m < model.states(); ++m) s += model.mean(m, arm) * b[static_cast<std::size_t>(m)];
  return s;
}

double expected_reward(const HmmBanditModel& model, const Belief& b, int arm) {
  if (arm < 0 || arm >= model.arms()) throw Error(ErrorCode::InvalidArgument, "arm out of range");
  return expected_reward(model, b.span(), arm);
}

void BeliefHistory::write_csv(std::ostream& out) const {
  const int m_count = beliefs.empty() ? 0 : beliefs.front().size();
  out << "t";
  for (int m = 0; m < m_count; ++m) out << ",b" << (m + 1);
  out << ",arm,reward\n";
  for (std::size_t t = 0; t < beliefs.size(); ++t) {
    out << (t + 1);
    for (int m = 0; m < m_count; ++m) out << ',' << format_double(beliefs[t][m]);
    if (t < steps.size())
      out << ',' << (steps[t].arm + 1) << ',' << steps[t].reward << '\n';
    else
      out << ",,\n";
  }
}

BeliefHistory replay_beliefs(const HmmBanditModel& model, const Belief& initial, std::span<const ArmReward> history) {
  if (initial.size() != model.states()) throw Error(ErrorCode::InvalidArgument, "initial belief has wrong dimension");
  BeliefHistory out;
  out.steps.assign(history.begin(), history.end());
  out.beliefs.reserve(history.size() + 1);
  out.beliefs.push_back(initial);
  for (const auto& step : history) out.beliefs.push_back(belief_update(model, out.beliefs.back(), step.arm, step.reward));
  return out;
}

Belief replay_final_belief(const HmmBanditModel& model, const Belief& initial, std::span<const ArmReward> history) {
  if (initial.size() != model.states()) throw Error(ErrorCode::InvalidArgument, "initial belief has wrong dimension");
  Vector current = initial.vector();
  Vector next(model.states());
  const auto n = static_cast<std::size_t>(model.states());
  for (const auto& step : history) {
    belief_update_into(model, {current.data(), n}, step.arm, step.reward, {next.data(), n});
    current.swap(next);
  }
  return Belief::trusted(std::move(current));
}

BeliefErrorConstants belief_error_constants(const HmmBanditModel& model) {
  const double eps = model.epsilon();
  if (eps <= 0.0) throw Error(ErrorCode::ZeroTransitionEntry, "belief error constants need epsilon > 0");
  const double m = model.states();
  const double mu_min = model.means().minCoeff();
  const double mu_max = model.means().maxCoeff();
  const double ratio = (1.0 - eps) / eps;
  BeliefErrorConstants c;
  c.l1 = 4.0 * m * ratio * ratio / std::min(mu_min, 1.0 - mu_max);
  c.l2 = 4.0 * m * (1.0 - eps) * (1.0 - eps) / (eps * eps * eps) + std::sqrt(m);
  return c;
}

ForgettingConstants forgetting_constants(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw Error(ErrorCode::InvalidArgument, "forgetting constants need epsilon in (0, 1/2]");
  return {(1.0 - 2.0 * epsilon) / (1.0 - epsilon), 2.0 * (1.0 - epsilon) / epsilon};
}

}  // namespace rsb
