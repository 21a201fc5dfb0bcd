#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rsbandit/errors.hpp"
#include "rsbandit/planner.hpp"

namespace rsb {
namespace {

HmmBanditModel two_state() {
  return HmmBanditModel((Matrix(2, 2) << 1.0 / 3, 2.0 / 3, 0.75, 0.25).finished(),
                        (Matrix(2, 2) << 0.9, 0.1, 0.5, 0.6).finished());
}

void expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

PlannerSolution solve(const HmmBanditModel& model, int resolution, PlannerOptions opts = {}) {
  return solve_average_reward(model, build_simplex_grid(model.states(), resolution), opts);
}

TEST(SimplexGrid, TwoStatePointsAreOrderedByFirstComponent) {
  const SimplexGrid g(2, 4);
  ASSERT_EQ(g.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_DOUBLE_EQ(g.point(k)[0], k / 4.0);
    EXPECT_DOUBLE_EQ(g.point(k)[1], 1.0 - k / 4.0);
  }
  EXPECT_EQ(g.reference_index(), 2u);
}

TEST(SimplexGrid, ThreeStateCompositions) {
  const SimplexGrid g(3, 2);
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(simplex_grid_size(3, 2), 6u);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto c = g.composition(k);
    EXPECT_EQ(c[0] + c[1] + c[2], 2);
    const auto p = g.point(k);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  }
}

TEST(SimplexGrid, SizesAndLimits) {
  EXPECT_EQ(SimplexGrid(1, 7).size(), 1u);
  EXPECT_EQ(simplex_grid_size(2, 100), 101u);
  EXPECT_EQ(simplex_grid_size(3, 20), 231u);
  EXPECT_EQ(simplex_grid_size(4, 10), 286u);
  expect_code(ErrorCode::GridTooLarge, [] { build_simplex_grid(10, 100); });
  EXPECT_LE(simplex_grid_size(6, default_grid_resolution(6)), 200000u);
}

TEST(SimplexGrid, NearestPointIsClosestInL1) {
  RngStream rng(3);
  for (int m : {2, 3, 4}) {
    const SimplexGrid g(m, 6);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> b(m);
      double s = 0.0;
      for (double& x : b) s += (x = -std::log(1.0 - rng.uniform()));
      for (double& x : b) x /= s;
      const std::size_t k = g.nearest(b);
      auto dist = [&](std::size_t j) {
        double d = 0.0;
        for (int i = 0; i < m; ++i) d += std::abs(g.point(j)[i] - b[i]);
        return d;
      };
      double best = 1e9;
      for (std::size_t j = 0; j < g.size(); ++j) best = std::min(best, dist(j));
      EXPECT_NEAR(dist(k), best, 1e-12);
    }
  }
}

TEST(SimplexGrid, LocateInterpolatesForTwoStates) {
  const SimplexGrid g(2, 4);
  const std::vector<double> b = {0.3, 0.7};
  const auto loc = g.locate(b);
  EXPECT_EQ(loc.lo, 1u);
  EXPECT_EQ(loc.hi, 2u);
  EXPECT_NEAR(loc.weight_hi, 0.2, 1e-12);
  const std::vector<double> corner = {1.0, 0.0};
  const auto top = g.locate(corner);
  EXPECT_EQ(top.hi, 4u);
  EXPECT_DOUBLE_EQ(top.weight_hi, 1.0);
}

TEST(Planner, IdenticalRowsGiveTheStaticBestArm) {
  // Every row of P is (0.3, 0.7): the belief after one step never depends on history.
  const HmmBanditModel m((Matrix(2, 2) << 0.3, 0.7, 0.3, 0.7).finished(),
                         (Matrix(2, 3) << 0.2, 0.5, 0.9, 0.6, 0.4, 0.1).finished());
  const PlannerSolution sol = solve(m, 50);
  ASSERT_TRUE(sol.converged);
  const double best = std::max({0.3 * 0.2 + 0.7 * 0.6, 0.3 * 0.5 + 0.7 * 0.4, 0.3 * 0.9 + 0.7 * 0.1});
  EXPECT_NEAR(sol.rho, best, 1e-6);
  EXPECT_LT(bias_span(sol), 1.0);
}

TEST(Planner, TwoStateOptimumIsTheBestFixedArm) {
  const HmmBanditModel m = two_state();
  for (int d : {50, 100, 200}) {
    const PlannerSolution sol = solve(m, d);
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.rho, 12.1 / 17, 1e-5) << "d = " << d;
  }
}

TEST(Planner, RhoSandwichedBetweenFixedArmAndOracle) {
  RngStream rng(77);
  for (int k = 0; k < 20; ++k) {
    const int states = 2 + k % 2;
    const HmmBanditModel m = testing::random_valid_model(rng, states, states + k % 3 / 2);
    const PlannerSolution sol = solve(m, default_grid_resolution(states));
    ASSERT_TRUE(sol.converged);
    double fixed = 0.0;
    for (int i = 0; i < m.arms(); ++i) fixed = std::max(fixed, testing::fixed_arm_average(m, i));
    const double slack = states == 2 ? 1e-4 : 5e-3;
    EXPECT_GE(sol.rho, fixed - slack) << "model " << k;
    EXPECT_LE(sol.rho, testing::oracle_average(m) + slack) << "model " << k;
  }
}

TEST(Planner, IncrementsBracketRhoAndSpanShrinks) {
  RngStream rng(5);
  for (int k = 0; k < 5; ++k) {
    const HmmBanditModel m = testing::random_valid_model(rng, 3, 3);
    const PlannerSolution sol = solve(m, 12);
    EXPECT_LE(sol.increment_min, sol.rho);
    EXPECT_GE(sol.increment_max, sol.rho);
    EXPECT_LE(sol.increment_max - sol.increment_min, 1e-6);
    for (std::size_t i = 1; i < sol.span_history.size(); ++i)
      EXPECT_LE(sol.span_history[i], sol.span_history[i - 1] + 1e-12);
  }
}

TEST(Planner, RewardShiftMovesRhoOnly) {
  const HmmBanditModel m = two_state();
  const PlannerSolution a = solve(m, 60);
  const PlannerSolution b = solve(m, 60, PlannerOptions{.reward_shift = 0.25});
  EXPECT_NEAR(b.rho - a.rho, 0.25, 1e-9);
  EXPECT_EQ(a.policy, b.policy);
  EXPECT_NEAR(bias_span(a), bias_span(b), 1e-6);
}

TEST(Planner, GreedyActionMatchesPolicyOnGrid) {
  RngStream rng(9);
  const HmmBanditModel m = testing::random_valid_model(rng, 2, 3);
  const PlannerSolution sol = solve(m, 40);
  for (std::size_t k = 0; k < sol.grid->size(); ++k)
    EXPECT_EQ(sol.act(m, sol.grid->point(k)), sol.policy[k]) << "point " << k;
}

TEST(Planner, NonConvergenceIsReportedNotThrown) {
  const PlannerSolution sol = solve(two_state(), 100, PlannerOptions{.tolerance = 1e-15, .max_iterations = 3});
  EXPECT_FALSE(sol.converged);
  EXPECT_EQ(sol.iterations, 3);
}

TEST(Planner, ZeroTransitionEntryIsRejected) {
  const HmmBanditModel m((Matrix(2, 2) << 1.0, 0.0, 0.5, 0.5).finished(),
                         (Matrix(2, 2) << 0.9, 0.1, 0.5, 0.6).finished());
  expect_code(ErrorCode::ZeroTransitionEntry, [&] { solve(m, 20); });
}

TEST(BiasSpanBound, KnownValueAndMonotone) {
  EXPECT_NEAR(bias_span_bound(0.25), 745.5218, 1e-3);
  double prev = bias_span_bound(0.01);
  for (double eps = 0.02; eps < 0.5; eps += 0.01) {
    const double d = bias_span_bound(eps);
    EXPECT_LT(d, prev) << "eps = " << eps;
    prev = d;
  }
  EXPECT_TRUE(std::isfinite(bias_span_bound(0.5)));
  expect_code(ErrorCode::InvalidArgument, [] { bias_span_bound(0.0); });
  expect_code(ErrorCode::InvalidArgument, [] { bias_span_bound(0.6); });
}

TEST(BiasSpanBound, HoldsForSolvedModels) {
  RngStream rng(31);
  for (int k = 0; k < 10; ++k) {
    const HmmBanditModel m = testing::random_valid_model(rng, 2, 2);
    const PlannerSolution sol = solve(m, 100);
    EXPECT_LE(bias_span(sol), bias_span_bound(m.epsilon()));
  }
}

ConfidenceRegion region_around(const HmmBanditModel& m, double rmu, double rp) {
  ConfidenceRegion r;
  r.mu_center = m.means();
  r.p_center = m.transition();
  r.radius_mu_row = rmu;
  r.radius_p = rp;
  return r;
}

TEST(OptimisticSearch, ZeroRadiusReturnsTheCenter) {
  const HmmBanditModel m = two_state();
  RngStream rng(2);
  const auto grid = build_simplex_grid(2, 60);
  const OptimisticChoice c = optimistic_model_search(region_around(m, 0.0, 0.0), grid, {}, {}, rng);
  ASSERT_TRUE(c.model.has_value());
  EXPECT_LT((c.model->means() - m.means()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((c.model->transition() - m.transition()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(c.rho, solve_average_reward(m, grid).rho, 1e-12);
  EXPECT_EQ(c.chosen_index, 0);
}

TEST(OptimisticSearch, ChoiceStaysInRegionAndBeatsCenter) {
  RngStream mrng(12);
  for (int k = 0; k < 5; ++k) {
    const HmmBanditModel m = testing::random_valid_model(mrng, 2, 2, 0.1);
    const double rmu = 0.05, rp = 0.05;
    RngStream rng(k);
    const auto grid = build_simplex_grid(2, 50);
    const OptimisticChoice c = optimistic_model_search(region_around(m, rmu, rp), grid, {}, {}, rng);
    ASSERT_TRUE(c.model.has_value());
    EXPECT_GE(c.rho, solve_average_reward(m, grid).rho - 1e-12);
    for (int s = 0; s < 2; ++s) EXPECT_LE((c.model->means().row(s) - m.means().row(s)).norm(), rmu + 1e-12);
    EXPECT_LE((c.model->transition() - m.transition()).norm(), std::sqrt(2.0) * rp + 1e-12);
    RngStream again(k);
    const auto all = optimistic_candidates(region_around(m, rmu, rp), {}, again);
    EXPECT_EQ(c.candidates_evaluated + c.candidates_skipped, static_cast<int>(all.size()));
  }
}

TEST(OptimisticSearch, CandidatesAreFeasibleAndSeeded) {
  const ConfidenceRegion r = region_around(two_state(), 0.3, 0.3);
  RngStream a(4), b(4);
  const auto ca = optimistic_candidates(r, {}, a);
  const auto cb = optimistic_candidates(r, {}, b);
  ASSERT_EQ(ca.size(), cb.size());
  EXPECT_GE(ca.size(), 64u);
  const EstimateBounds bounds;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    EXPECT_EQ(ca[i].means(), cb[i].means());
    EXPECT_GE(ca[i].means().minCoeff(), bounds.mu_floor);
    EXPECT_LE(ca[i].means().maxCoeff(), 1.0 - bounds.mu_floor);
    EXPECT_GE(ca[i].transition().minCoeff(), bounds.p_floor - 1e-12);
  }
}

TEST(PlannerCache, ReusesSolutions) {
  PlannerCache cache;
  const auto grid = build_simplex_grid(2, 30);
  const auto s1 = cache.solve(two_state(), grid, {});
  const auto s2 = cache.solve(two_state(), grid, {});
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
}

}  // namespace
}  // namespace rsb
