#include <benchmark/benchmark.h>

#include <vector>

#include "rsbandit/belief.hpp"
#include "rsbandit/planner.hpp"
#include "rsbandit/spectral.hpp"

namespace {

rsb::HmmBanditModel two_state() {
  return rsb::HmmBanditModel((rsb::Matrix(2, 2) << 1.0 / 3, 2.0 / 3, 0.75, 0.25).finished(),
                             (rsb::Matrix(2, 2) << 0.9, 0.1, 0.5, 0.6).finished());
}

rsb::HmmBanditModel three_state() {
  return rsb::HmmBanditModel(
      (rsb::Matrix(3, 3) << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.2, 0.7).finished(),
      (rsb::Matrix(3, 3) << 0.9, 0.1, 0.3, 0.5, 0.5, 0.5, 0.2, 0.8, 0.4).finished());
}

void BM_BeliefUpdate(benchmark::State& state) {
  const auto model = state.range(0) == 2 ? two_state() : three_state();
  std::vector<double> b(model.states(), 1.0 / model.states()), out(b.size());
  int t = 0;
  for (auto _ : state) {
    rsb::belief_update_into(model, b, t % model.arms(), (t / 3) % 2, out);
    b.swap(out);
    ++t;
  }
  benchmark::DoNotOptimize(b.data());
}
BENCHMARK(BM_BeliefUpdate)->Arg(2)->Arg(3);

void BM_RelativeValueIteration(benchmark::State& state) {
  const auto model = state.range(0) == 2 ? two_state() : three_state();
  const auto grid = rsb::build_simplex_grid(model.states(), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(rsb::solve_average_reward(model, grid).rho);
}
BENCHMARK(BM_RelativeValueIteration)->Args({2, 100})->Args({2, 400})->Args({3, 20})->Unit(benchmark::kMillisecond);

void BM_SpectralEstimate(benchmark::State& state) {
  const auto model = two_state();
  const auto tr = rsb::sample_trajectory(model, rsb::uniform_arm_policy(2), static_cast<std::size_t>(state.range(0)), 1);
  std::vector<rsb::ExplorationSegment> segs(1);
  for (std::size_t t = 0; t < tr.size(); ++t) segs[0].push_back({tr.arms[t], tr.rewards[t]});
  for (auto _ : state) {
    rsb::RngStream rng(2);
    benchmark::DoNotOptimize(rsb::spectral_estimate(segs, 2, 2, rng).estimate.mu_hat.data());
  }
}
BENCHMARK(BM_SpectralEstimate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_TensorDecompose(benchmark::State& state) {
  const auto moments = rsb::population_moments(three_state());
  for (auto _ : state) {
    rsb::RngStream rng(3);
    benchmark::DoNotOptimize(rsb::tensor_decompose(moments.m2, moments.m3, 3, rng).residual);
  }
}
BENCHMARK(BM_TensorDecompose)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
