#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rsbandit/belief.hpp"
#include "rsbandit/errors.hpp"

namespace rsb {
namespace {

HmmBanditModel two_state() {
  return HmmBanditModel((Matrix(2, 2) << 1.0 / 3, 2.0 / 3, 0.75, 0.25).finished(),
                        (Matrix(2, 2) << 0.9, 0.1, 0.5, 0.6).finished());
}

std::vector<ArmReward> random_history(RngStream& rng, int arms, std::size_t n) {
  std::vector<ArmReward> h;
  for (std::size_t t = 0; t < n; ++t) h.push_back({rng.uniform_int(arms), rng.bernoulli(0.5) ? 1 : 0});
  return h;
}

Belief random_belief(RngStream& rng, int m) {
  Vector v(m);
  for (int i = 0; i < m; ++i) v(i) = -std::log(1.0 - rng.uniform());
  return Belief(v / v.sum());
}

TEST(BeliefUpdate, HandComputedExample) {
  const Belief b = belief_update(two_state(), Belief::uniform(2), 0, 1);
  EXPECT_NEAR(b[0], 27.0 / 56, 1e-15);
  EXPECT_NEAR(b[1], 29.0 / 56, 1e-15);
}

TEST(BeliefUpdate, UninformativeArmIsPurePrediction) {
  const HmmBanditModel m((Matrix(2, 2) << 1.0 / 3, 2.0 / 3, 0.75, 0.25).finished(),
                         (Matrix(2, 1) << 0.4, 0.4).finished());
  const Belief b = belief_update(m, Belief::point_mass(2, 0), 0, 1);
  EXPECT_NEAR(b[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(b[1], 2.0 / 3, 1e-15);
}

TEST(BeliefUpdate, SingleState) {
  const HmmBanditModel m(Matrix::Ones(1, 1), (Matrix(1, 2) << 0.3, 0.6).finished());
  EXPECT_DOUBLE_EQ(belief_update(m, Belief::uniform(1), 1, 0)[0], 1.0);
}

TEST(BeliefUpdate, MatchesNaiveFilterAndStaysOnSimplex) {
  RngStream rng(4);
  for (int trial = 0; trial < 10000; ++trial) {
    const int states = 2 + trial % 3;
    const int arms = 1 + trial % 3;
    const HmmBanditModel m = testing::random_valid_model(rng, states, std::max(arms, states), 0.02);
    const Belief b = random_belief(rng, states);
    const int arm = rng.uniform_int(m.arms());
    const int r = rng.bernoulli(0.5) ? 1 : 0;
    const Belief out = belief_update(m, b, arm, r);
    ASSERT_NEAR(out.vector().sum(), 1.0, 1e-10);
    ASSERT_GE(out.vector().minCoeff(), m.epsilon() - 1e-12);
    const Vector ref = testing::naive_belief_update(m.transition(), m.means(), b.vector(), arm, r);
    ASSERT_LE((out.vector() - ref).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ExpectedReward, Examples) {
  const HmmBanditModel m = two_state();
  EXPECT_NEAR(expected_reward(m, Belief::uniform(2), 0), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(expected_reward(m, Belief::point_mass(2, 0), 0), 0.9);
  EXPECT_DOUBLE_EQ(expected_reward(m, Belief::point_mass(2, 1), 1), 0.6);
}

TEST(ExpectedReward, AffineInBelief) {
  const HmmBanditModel m = two_state();
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Belief a = random_belief(rng, 2);
    const Belief b = random_belief(rng, 2);
    const double lambda = rng.uniform();
    const Belief mix(lambda * a.vector() + (1.0 - lambda) * b.vector());
    for (int arm = 0; arm < 2; ++arm) {
      EXPECT_NEAR(expected_reward(m, mix, arm),
                  lambda * expected_reward(m, a, arm) + (1.0 - lambda) * expected_reward(m, b, arm), 1e-15);
    }
  }
}

TEST(Replay, EmptyAndSingleStep) {
  const HmmBanditModel m = two_state();
  const Belief b1 = Belief::uniform(2);
  const BeliefHistory empty = replay_beliefs(m, b1, {});
  ASSERT_EQ(empty.beliefs.size(), 1u);
  EXPECT_EQ(empty.beliefs[0].vector(), b1.vector());
  const std::vector<ArmReward> one{{1, 0}};
  const BeliefHistory h = replay_beliefs(m, b1, one);
  ASSERT_EQ(h.beliefs.size(), 2u);
  EXPECT_EQ(h.beliefs[1].vector(), belief_update(m, b1, 1, 0).vector());
}

TEST(Replay, MatchesIndependentForwardFilter) {
  const HmmBanditModel m = two_state();
  RngStream rng(6);
  const auto history = random_history(rng, 2, 1000);
  const BeliefHistory h = replay_beliefs(m, Belief::uniform(2), history);
  Vector b = Vector::Constant(2, 0.5);
  for (std::size_t t = 0; t < history.size(); ++t) {
    Vector like(2);
    for (int s = 0; s < 2; ++s) {
      const double mu = m.mean(s, history[t].arm);
      like(s) = history[t].reward == 1 ? mu : 1.0 - mu;
    }
    Vector filtered = like.cwiseProduct(b);
    filtered /= filtered.sum();
    b = m.transition().transpose() * filtered;
    ASSERT_LE((h.beliefs[t + 1].vector() - b).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(replay_final_belief(m, Belief::uniform(2), history).vector(), h.beliefs.back().vector());
}

TEST(BeliefErrorConstants, TwoStateInstance) {
  const BeliefErrorConstants c = belief_error_constants(two_state());
  EXPECT_NEAR(c.l1, 720.0, 1e-9);
  EXPECT_NEAR(c.l2, 288.0 + std::sqrt(2.0), 1e-9);
}

TEST(BeliefErrorConstants, SingleStateSubstitution) {
  // P = [1] has epsilon = 1, so both (1 - eps) factors vanish.
  const HmmBanditModel m(Matrix::Ones(1, 1), (Matrix(1, 2) << 0.2, 0.7).finished());
  const BeliefErrorConstants c = belief_error_constants(m);
  EXPECT_DOUBLE_EQ(c.l1, 0.0);
  EXPECT_DOUBLE_EQ(c.l2, 1.0);
}

TEST(BeliefErrorConstants, FirstTermOfL2IsLinearInStates) {
  // Same epsilon, mu_min and mu_max with twice the states.
  const Matrix p2 = (Matrix(2, 2) << 0.8, 0.2, 0.2, 0.8).finished();
  Matrix p4 = Matrix::Constant(4, 4, 0.2);
  p4.diagonal().setConstant(0.4);
  const Matrix mu2 = (Matrix(2, 2) << 0.1, 0.9, 0.5, 0.5).finished();
  const Matrix mu4 = (Matrix(4, 1) << 0.1, 0.9, 0.5, 0.5).finished();
  const auto c2 = belief_error_constants(HmmBanditModel(p2, mu2));
  const auto c4 = belief_error_constants(HmmBanditModel(p4, mu4));
  EXPECT_NEAR(c4.l2 - 2.0, 2.0 * (c2.l2 - std::sqrt(2.0)), 1e-9);
  EXPECT_NEAR(c4.l1, 2.0 * c2.l1, 1e-9);
}

TEST(BeliefErrorConstants, ZeroEntryRejected) {
  const HmmBanditModel m((Matrix(2, 2) << 1.0, 0.0, 0.5, 0.5).finished(),
                         (Matrix(2, 2) << 0.9, 0.1, 0.5, 0.6).finished());
  EXPECT_THROW(belief_error_constants(m), Error);
}

TEST(Forgetting, ConstantsForQuarter) {
  const ForgettingConstants f = forgetting_constants(0.25);
  EXPECT_NEAR(f.rate, 2.0 / 3, 1e-15);
  EXPECT_NEAR(f.prefactor, 6.0, 1e-15);
  EXPECT_THROW(forgetting_constants(0.0), Error);
  EXPECT_THROW(forgetting_constants(0.6), Error);
}

TEST(Forgetting, PairedReplaysContract) {
  const HmmBanditModel m = two_state();
  const ForgettingConstants f = forgetting_constants(m.epsilon());
  RngStream rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto history = random_history(rng, 2, 50);
    const Belief a = random_belief(rng, 2);
    const Belief b = random_belief(rng, 2);
    const double d1 = (a.vector() - b.vector()).lpNorm<1>();
    const auto ha = replay_beliefs(m, a, history);
    const auto hb = replay_beliefs(m, b, history);
    for (std::size_t t = 0; t < ha.beliefs.size(); ++t) {
      const double dt = (ha.beliefs[t].vector() - hb.beliefs[t].vector()).lpNorm<1>();
      ASSERT_LE(dt, f.prefactor * std::pow(f.rate, static_cast<double>(t)) * d1 + 1e-12) << "t=" << t + 1;
    }
  }
}

}  // namespace
}  // namespace rsb

namespace rsb {
namespace {

TEST(BeliefRobustness, PerturbedModelsStayWithinLinearBound) {
  const HmmBanditModel m = two_state();
  const BeliefErrorConstants c = belief_error_constants(m);
  RngStream rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const HmmBanditModel hat = testing::perturb_model(m, 0.05, rng);
    const double bound = c.l1 * testing::max_column_l1(hat.means() - m.means()) +
                         c.l2 * (hat.transition() - m.transition()).norm();
    const auto history = random_history(rng, 2, 50);
    const auto truth = replay_beliefs(m, Belief::uniform(2), history);
    const auto est = replay_beliefs(hat, Belief::uniform(2), history);
    for (std::size_t t = 0; t < truth.beliefs.size(); ++t) {
      ASSERT_LE((est.beliefs[t].vector() - truth.beliefs[t].vector()).lpNorm<1>(), bound);
    }
  }
}

}  // namespace
}  // namespace rsb
