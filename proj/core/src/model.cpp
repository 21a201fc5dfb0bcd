#include "rsbandit/model.hpp"

#include <cmath>
#include <fmt/format.h>

#include "rsbandit/errors.hpp"

namespace rsb {

namespace {

void check_structure(const Matrix& transition, const Matrix& means) {
  if (transition.rows() < 1 || transition.rows() != transition.cols())
    throw Error(ErrorCode::InvalidArgument, "transition matrix must be square and non-empty");
  if (means.rows() != transition.rows() || means.cols() < 1)
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("mean matrix has {} rows, transition has {}", means.rows(), transition.rows()));
}

// Rows within tolerance are renormalized in place; anything else is rejected.
void normalize_rows(Matrix& transition) {
  for (Eigen::Index r = 0; r < transition.rows(); ++r) {
    for (Eigen::Index c = 0; c < transition.cols(); ++c) {
      const double v = transition(r, c);
      if (!std::isfinite(v) || v < 0.0)
        throw Error(ErrorCode::RowsNotStochastic, fmt::format("P({},{}) = {} is not a probability", r, c, v));
    }
    const double sum = transition.row(r).sum();
    if (std::abs(sum - 1.0) > kStochasticTolerance)
      throw Error(ErrorCode::RowsNotStochastic, fmt::format("row {} of P sums to {:.17g}", r, sum));
    transition.row(r) /= sum;
  }
}

void check_means(const Matrix& means) {
  for (Eigen::Index m = 0; m < means.rows(); ++m)
    for (Eigen::Index i = 0; i < means.cols(); ++i) {
      const double v = means(m, i);
      if (!(v > 0.0 && v < 1.0))
        throw Error(ErrorCode::MeanOutOfRange, fmt::format("mu({},{}) = {} is outside (0, 1)", m, i, v));
    }
}

}  // namespace

HmmBanditModel::HmmBanditModel(Matrix transition, Matrix means)
    : transition_(std::move(transition)), means_(std::move(means)) {
  check_structure(transition_, means_);
  normalize_rows(transition_);
  check_means(means_);
  epsilon_ = transition_.minCoeff();
}

ModelDiagnostics diagnose(const HmmBanditModel& model) {
  ModelDiagnostics d;
  d.epsilon = model.epsilon();
  d.abs_det_transition = std::abs(model.transition().determinant());
  // Full row rank needs M <= I; otherwise the M-th singular value is zero.
  d.min_singular_means = model.states() > model.arms() ? 0.0 : min_singular_value(model.means());
  return d;
}

HmmBanditModel validate_model(Matrix transition, Matrix means) {
  HmmBanditModel model(std::move(transition), std::move(means));
  const ModelDiagnostics d = diagnose(model);
  if (d.abs_det_transition < 1e-10)
    throw Error(ErrorCode::SingularTransition,
                fmt::format("|det P| = {:.3g}; the chain must be invertible", d.abs_det_transition));
  if (d.min_singular_means < 1e-10)
    throw Error(ErrorCode::RankDeficientRewards,
                fmt::format("smallest singular value of mu is {:.3g}; mu must have full row rank",
                            d.min_singular_means));
  if (d.epsilon <= 0.0)
    throw Error(ErrorCode::ZeroTransitionEntry,
                "minimum transition probability is 0; every entry of P must be positive");
  return model;
}

Belief::Belief(Vector probabilities) : p_(std::move(probabilities)) {
  if (p_.size() < 1) throw Error(ErrorCode::InvalidArgument, "belief must have at least one component");
  for (Eigen::Index m = 0; m < p_.size(); ++m)
    if (!std::isfinite(p_(m)) || p_(m) < 0.0)
      throw Error(ErrorCode::InvalidArgument, fmt::format("belief component {} = {} is negative", m, p_(m)));
  if (std::abs(p_.sum() - 1.0) > kBeliefTolerance)
    throw Error(ErrorCode::InvalidArgument, fmt::format("belief sums to {:.17g}", p_.sum()));
}

Belief Belief::uniform(int states) {
  return Belief(Vector::Constant(states, 1.0 / states), TrustedTag{});
}

Belief Belief::point_mass(int states, int state) {
  if (state < 0 || state >= states) throw Error(ErrorCode::InvalidArgument, "point mass state out of range");
  Vector p = Vector::Zero(states);
  p(state) = 1.0;
  return Belief(std::move(p), TrustedTag{});
}

Belief Belief::trusted(Vector probabilities) { return Belief(std::move(probabilities), TrustedTag{}); }

ObservationIndex encode_observation(int arm, int reward, int num_arms) {
  if (arm < 0 || arm >= num_arms)
    throw Error(ErrorCode::InvalidArgument, fmt::format("arm {} outside [0, {})", arm, num_arms));
  if (reward != 0 && reward != 1)
    throw Error(ErrorCode::InvalidArgument, fmt::format("reward {} is not binary", reward));
  return ObservationIndex{2 * arm + reward};
}

ArmReward decode_observation(ObservationIndex s, int num_arms) {
  if (s.value < 0 || s.value >= 2 * num_arms)
    throw Error(ErrorCode::InvalidArgument, fmt::format("observation {} outside [0, {})", s.value, 2 * num_arms));
  return ArmReward{s.value / 2, s.value % 2};
}

Belief stationary_distribution(const Matrix& transition) {
  const auto m = transition.rows();
  if (m < 1 || transition.cols() != m) throw Error(ErrorCode::InvalidArgument, "transition matrix must be square");
  // (P^T - I) w = 0 with the last equation replaced by sum(w) = 1.
  Matrix system = transition.transpose() - Matrix::Identity(m, m);
  system.row(m - 1).setOnes();
  Vector rhs = Vector::Zero(m);
  rhs(m - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw Error(ErrorCode::NoUniqueStationary, "stationary equations are numerically singular");
  Vector w = lu.solve(rhs);
  for (Eigen::Index i = 0; i < m; ++i) w(i) = std::max(w(i), 0.0);
  w /= w.sum();
  const double residual = (w.transpose() * transition - w.transpose()).lpNorm<1>();
  if (residual > 1e-10)
    throw Error(ErrorCode::NoUniqueStationary, fmt::format("stationary residual {:.3g} exceeds 1e-10", residual));
  return Belief::trusted(std::move(w));
}

Environment::Environment(const HmmBanditModel& model, const Belief& initial, std::uint64_t seed)
    : model_(model), chain_(seed, Stream::Chain), rewards_(seed, Stream::Reward) {
  if (initial.size() != model.states())
    throw Error(ErrorCode::InvalidArgument, "initial distribution has the wrong dimension");
  state_ = chain_.categorical(initial.vector(), initial.size());
}

int Environment::pull(int arm) {
  if (arm < 0 || arm >= model_.arms())
    throw Error(ErrorCode::InvalidArgument, fmt::format("arm {} outside [0, {})", arm, model_.arms()));
  // One reward draw and one transition draw per period, whatever the arm.
  const int reward = rewards_.uniform() < model_.mean(state_, arm) ? 1 : 0;
  state_ = chain_.categorical(model_.transition().row(state_), model_.states());
  ++t_;
  return reward;
}

ArmPolicy uniform_arm_policy(int num_arms) {
  return [num_arms](const Trajectory&, RngStream& rng) { return rng.uniform_int(num_arms); };
}

ArmPolicy fixed_sequence_policy(std::vector<int> arms) {
  return [arms = std::move(arms)](const Trajectory& history, RngStream&) {
    if (history.size() >= arms.size()) throw Error(ErrorCode::InvalidArgument, "fixed arm sequence exhausted");
    return arms[history.size()];
  };
}

Trajectory sample_trajectory(const HmmBanditModel& model, const ArmPolicy& policy, std::size_t horizon,
                             std::uint64_t seed, const std::optional<Belief>& initial) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
  const Belief start = initial ? *initial : stationary_distribution(model.transition());
  Environment env(model, start, seed);
  RngStream agent(seed, Stream::Agent);
  Trajectory path;
  path.states.reserve(horizon);
  path.arms.reserve(horizon);
  path.rewards.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const int state = env.hidden_state();
    const int arm = policy(path, agent);
    const int reward = env.pull(arm);
    path.states.push_back(state);
    path.arms.push_back(arm);
    path.rewards.push_back(static_cast<std::uint8_t>(reward));
  }
  return path;
}

}  // namespace rsb
