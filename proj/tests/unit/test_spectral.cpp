#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "rsbandit/errors.hpp"
#include "rsbandit/spectral.hpp"

namespace rsb {
namespace {

HmmBanditModel two_state() {
  return HmmBanditModel((Matrix(2, 2) << 1.0 / 3, 2.0 / 3, 0.75, 0.25).finished(),
                        (Matrix(2, 2) << 0.9, 0.1, 0.5, 0.6).finished());
}

ExplorationSegment segment_of(std::initializer_list<int> symbols, int arms) {
  ExplorationSegment seg;
  for (int s : symbols) seg.push_back(decode_observation(ObservationIndex{s}, arms));
  return seg;
}

void expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Decomposes population moments and returns the estimate aligned to the truth.
SpectralEstimate population_estimate(const HmmBanditModel& model, std::uint64_t seed) {
  const MomentStats moments = population_moments(model);
  RngStream rng(seed);
  const TensorDecomposition dec = tensor_decompose(moments.m2, moments.m3, model.states(), rng);
  SpectralEstimate est = recover_parameters(dec.columns, moments, model.states(), model.arms(),
                                            EstimateBounds{.mu_floor = 0.0, .p_floor = 0.0});
  const auto perm = align_permutation(est.mu_hat, model.means());
  est.mu_hat = permute_rows(est.mu_hat, perm);
  est.p_hat = permute_states(est.p_hat, perm);
  return est;
}

TEST(CollectTriples, SkipsShortSegmentsAndBoundaries) {
  std::vector<ExplorationSegment> segs = {segment_of({0, 1}, 2), segment_of({0, 1, 2}, 2),
                                          segment_of({3, 2, 1, 0, 3}, 2)};
  const auto triples = collect_triples(segs, 2);
  ASSERT_EQ(triples.size(), 1u + 3u);
  EXPECT_EQ(triples[0].prev, 0);
  EXPECT_EQ(triples[0].cur, 1);
  EXPECT_EQ(triples[0].next, 2);
  EXPECT_EQ(triples[3].prev, 1);
  EXPECT_EQ(triples[3].next, 3);
}

TEST(CollectTriples, NoTripleIsAnError) {
  std::vector<ExplorationSegment> segs = {segment_of({0, 1}, 2), segment_of({}, 2)};
  expect_code(ErrorCode::InsufficientData, [&] { collect_triples(segs, 2); });
}

TEST(EstimateMoments, CountsPairsFromTwoTriples) {
  const std::vector<ObservationTriple> triples = {{0, 1, 2}, {1, 0, 3}};
  const MomentStats m = estimate_moments(triples, 2, 2);
  EXPECT_EQ(m.n_triples, 2u);
  EXPECT_DOUBLE_EQ(m.w_prev_cur(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.w_prev_cur(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.w_next_cur(2, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.w_next_cur(3, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.w_next_prev(2, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.w_next_prev(3, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.w_prev_cur.sum(), 1.0);
  EXPECT_TRUE(m.w_cur_prev.isApprox(m.w_prev_cur.transpose()));
}

TEST(EstimateMoments, ConstantSequenceIsIllConditioned) {
  const std::vector<ObservationTriple> triples(50, ObservationTriple{1, 1, 1});
  expect_code(ErrorCode::IllConditionedMoments, [&] { estimate_moments(triples, 2, 2); });
}

TEST(EstimateMoments, RejectsSymbolsOutsideAlphabet) {
  const std::vector<ObservationTriple> triples = {{0, 1, 4}};
  expect_code(ErrorCode::InvalidArgument, [&] { estimate_moments(triples, 2, 1); });
}

TEST(PopulationViews, TwoStateEntries) {
  const PopulationViews v = population_views(two_state());
  EXPECT_NEAR(v.a2(1, 0), 0.45, 1e-15);
  EXPECT_NEAR(v.a2(0, 0), 0.05, 1e-15);
  EXPECT_NEAR(v.a2(3, 1), 0.30, 1e-15);
  for (const Matrix* a : {&v.a1, &v.a2, &v.a3})
    for (int m = 0; m < 2; ++m) EXPECT_NEAR(a->col(m).sum(), 1.0, 1e-12);
}

TEST(PopulationMoments, PairsMatchPathEnumeration) {
  RngStream rng(11);
  std::vector<HmmBanditModel> models = {two_state()};
  for (int k = 0; k < 5; ++k) models.push_back(testing::random_valid_model(rng, 3, 3));
  for (const auto& model : models) {
    const MomentStats m = population_moments(model);
    const testing::TripleLaw law = testing::enumerate_triple_law(model);
    EXPECT_LT((m.w_prev_cur - law.pair(-1, 0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((m.w_next_cur - law.pair(1, 0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((m.w_next_prev - law.pair(1, -1)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(m.w_next_prev.sum(), 1.0, 1e-12);
  }
}

TEST(PopulationMoments, EmpiricalMomentsConvergeToThem) {
  const HmmBanditModel model = two_state();
  const testing::TripleLaw law = testing::enumerate_triple_law(model);
  const Trajectory tr = sample_trajectory(model, uniform_arm_policy(2), 100000, 5);
  ExplorationSegment seg;
  for (std::size_t t = 0; t < tr.size(); ++t) seg.push_back({tr.arms[t], tr.rewards[t]});
  const std::vector<ExplorationSegment> segs = {seg};
  const MomentStats m = estimate_moments(collect_triples(segs, 2), 2, 2);
  EXPECT_LT((m.w_next_prev - law.pair(1, -1)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(TensorDecompose, RecoversNonOrthogonalComponents) {
  Matrix a(4, 3);
  a << 0.5, 0.1, 0.2,  //
      0.2, 0.6, 0.1,   //
      0.2, 0.2, 0.3,   //
      0.1, 0.1, 0.4;
  const Vector w = (Vector(3) << 0.5, 0.3, 0.2).finished();
  const Matrix m2 = a * w.asDiagonal() * a.transpose();
  Tensor3 m3(4);
  for (int k = 0; k < 3; ++k) m3.subtract_rank_one(-w(k), a.col(k));

  RngStream rng(3);
  const TensorDecomposition dec = tensor_decompose(m2, m3, 3, rng);
  EXPECT_LT(dec.residual, 1e-8);
  for (int k = 0; k < 3; ++k) {
    double best = 1e9;
    int match = -1;
    for (int j = 0; j < 3; ++j) {
      const double d = (dec.columns.col(j) - a.col(k)).norm();
      if (d < best) best = d, match = j;
    }
    EXPECT_LT(best, 1e-8) << "component " << k;
    EXPECT_NEAR(dec.weights(match), w(k), 1e-8);
  }
}

TEST(TensorDecompose, SingleComponent) {
  const Vector a = (Vector(2) << 0.3, 0.7).finished();
  const Matrix m2 = a * a.transpose();
  Tensor3 m3(2);
  m3.subtract_rank_one(-1.0, a);
  RngStream rng(1);
  const TensorDecomposition dec = tensor_decompose(m2, m3, 1, rng);
  EXPECT_LT((dec.columns.col(0) - a).norm(), 1e-10);
  EXPECT_NEAR(dec.weights(0), 1.0, 1e-10);
}

TEST(TensorDecompose, RankAboveSupportFailsWhitening) {
  const Vector a = (Vector(3) << 0.2, 0.3, 0.5).finished();
  Tensor3 m3(3);
  m3.subtract_rank_one(-1.0, a);
  RngStream rng(1);
  expect_code(ErrorCode::WhiteningFailure, [&] { tensor_decompose(a * a.transpose(), m3, 2, rng); });
}

TEST(SpectralRecovery, PopulationMomentsGiveTheTwoStateModel) {
  const HmmBanditModel model = two_state();
  const SpectralEstimate est = population_estimate(model, 7);
  EXPECT_LT((est.mu_hat - model.means()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((est.p_hat - model.transition()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SpectralRecovery, PopulationMomentsGiveRandomModels) {
  RngStream rng(2024);
  const std::pair<int, int> shapes[] = {{2, 2}, {2, 3}, {3, 3}};
  int checked = 0;
  for (int k = 0; k < 21; ++k) {
    const auto [states, arms] = shapes[k % 3];
    const HmmBanditModel model = testing::random_valid_model(rng, states, arms);
    const SpectralEstimate est = population_estimate(model, 100 + static_cast<std::uint64_t>(k));
    EXPECT_LT((est.mu_hat - model.means()).cwiseAbs().maxCoeff(), 1e-6) << "model " << k;
    EXPECT_LT((est.p_hat - model.transition()).cwiseAbs().maxCoeff(), 1e-6) << "model " << k;
    ++checked;
  }
  EXPECT_EQ(checked, 21);
}

TEST(SpectralRecovery, ProjectionKeepsEstimatesFeasible) {
  const HmmBanditModel model = two_state();
  const MomentStats moments = population_moments(model);
  const PopulationViews views = population_views(model);
  RngStream rng(9);
  const EstimateBounds bounds{.mu_floor = 0.02, .p_floor = 0.01};
  for (int trial = 0; trial < 50; ++trial) {
    Matrix b = views.a3;
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) b(i, j) += 0.2 * (rng.uniform() - 0.5);
    SpectralEstimate est;
    try {
      est = recover_parameters(b, moments, 2, 2, bounds);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DegenerateColumn);
      continue;
    }
    EXPECT_GE(est.mu_hat.minCoeff(), bounds.mu_floor);
    EXPECT_LE(est.mu_hat.maxCoeff(), 1.0 - bounds.mu_floor);
    EXPECT_GE(est.p_hat.minCoeff(), bounds.p_floor - 1e-12);
    for (int m = 0; m < 2; ++m) EXPECT_NEAR(est.p_hat.row(m).sum(), 1.0, 1e-12);
  }
}

TEST(SpectralRecovery, SampledTrajectoryLandsNearTruth) {
  const HmmBanditModel model = two_state();
  const Trajectory tr = sample_trajectory(model, uniform_arm_policy(2), 200000, 21);
  std::vector<ExplorationSegment> segs(1);
  for (std::size_t t = 0; t < tr.size(); ++t) segs[0].push_back({tr.arms[t], tr.rewards[t]});
  RngStream rng(4);
  SpectralResult r = spectral_estimate(segs, 2, 2, rng);
  const auto perm = align_permutation(r.estimate.mu_hat, model.means());
  EXPECT_LT((permute_rows(r.estimate.mu_hat, perm) - model.means()).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT((permute_states(r.estimate.p_hat, perm) - model.transition()).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_EQ(r.n_triples, tr.size() - 2);
}

TEST(SpectralRecovery, SameSeedSameEstimate) {
  const Trajectory tr = sample_trajectory(two_state(), uniform_arm_policy(2), 20000, 8);
  std::vector<ExplorationSegment> segs(1);
  for (std::size_t t = 0; t < tr.size(); ++t) segs[0].push_back({tr.arms[t], tr.rewards[t]});
  RngStream r1(5), r2(5);
  const SpectralResult a = spectral_estimate(segs, 2, 2, r1);
  const SpectralResult b = spectral_estimate(segs, 2, 2, r2);
  EXPECT_EQ(a.estimate.mu_hat, b.estimate.mu_hat);
  EXPECT_EQ(a.estimate.p_hat, b.estimate.p_hat);
}

TEST(ConfidenceRadius, KnownValueAndScaling) {
  EXPECT_NEAR(confidence_factor(4, 0.05, 7783), 0.031623, 5e-6);
  const double r1 = confidence_factor(6, 0.1, 1000);
  const double r4 = confidence_factor(6, 0.1, 4000);
  EXPECT_NEAR(r1 / r4, 2.0, 1e-12);
  EXPECT_GT(confidence_factor(6, 0.01, 1000), r1);
  expect_code(ErrorCode::InvalidArgument, [] { confidence_factor(4, 0.0, 10); });
  expect_code(ErrorCode::InvalidArgument, [] { confidence_factor(4, 0.1, 0); });
}

TEST(ConfidenceRadius, RegionScalesWithConstants) {
  SpectralEstimate est;
  est.mu_hat = Matrix::Constant(2, 2, 0.5);
  est.p_hat = Matrix::Constant(2, 2, 0.5);
  const ConfidenceRegion r = confidence_region(est, 7783, 0.05, 2.0, 0.5);
  EXPECT_NEAR(r.radius_mu_row, 2.0 * 0.031623, 1e-5);
  EXPECT_NEAR(r.radius_p, 0.5 * 0.031623, 1e-5);
  expect_code(ErrorCode::InvalidArgument, [&] { confidence_region(est, 10, 0.05, -1.0, 1.0); });
}

TEST(AlignPermutation, MatchesBruteForce) {
  RngStream rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + trial % 4;
    Matrix ref(m, 3), hat(m, 3);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < 3; ++j) ref(i, j) = rng.uniform(), hat(i, j) = rng.uniform();
    const auto perm = align_permutation(hat, ref);
    auto cost = [&](const std::vector<int>& p) {
      double c = 0.0;
      for (int i = 0; i < m; ++i) c += (hat.row(p[i]) - ref.row(i)).norm();
      return c;
    };
    std::vector<int> p(m);
    std::iota(p.begin(), p.end(), 0);
    double best = 1e9;
    do best = std::min(best, cost(p));
    while (std::next_permutation(p.begin(), p.end()));
    EXPECT_NEAR(cost(perm), best, 1e-12);
  }
}

TEST(AlignPermutation, UndoesAKnownRelabeling) {
  const HmmBanditModel model = HmmBanditModel(
      (Matrix(3, 3) << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.2, 0.7).finished(),
      (Matrix(3, 2) << 0.9, 0.1, 0.5, 0.5, 0.2, 0.8).finished());
  const std::vector<int> shuffle = {2, 0, 1};
  const Matrix mu = permute_rows(model.means(), shuffle);
  const Matrix p = permute_states(model.transition(), shuffle);
  const auto perm = align_permutation(mu, model.means());
  EXPECT_TRUE(permute_rows(mu, perm).isApprox(model.means()));
  EXPECT_TRUE(permute_states(p, perm).isApprox(model.transition()));
}

}  // namespace
}  // namespace rsb
