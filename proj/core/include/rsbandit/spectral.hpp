#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rsbandit/linalg.hpp"
#include "rsbandit/model.hpp"
#include "rsbandit/rng.hpp"

namespace rsb {

/// One exploration phase: contiguous uniformly-random pulls.
using ExplorationSegment = std::vector<ArmReward>;

/// Three consecutive observation indices (y_{t-1}, y_t, y_{t+1}).
struct ObservationTriple {
  int prev = 0;
  int cur = 0;
  int next = 0;
};

/// Consecutive triples lying entirely inside one segment; triples spanning
/// a segment boundary are skipped. Throws InsufficientData if none exist.
std::vector<ObservationTriple> collect_triples(std::span<const ExplorationSegment> segments, int num_arms);

/// Empirical (or population) moments over the S = 2I observation alphabet.
/// Matrix naming follows E[y_{t+i} y_{t+j}^T] with offsets i, j in {-1, 0, 1}.
struct MomentStats {
  int alphabet = 0;
  Matrix w_prev_cur;   ///< E[y_{t-1} y_t^T]
  Matrix w_next_cur;   ///< E[y_{t+1} y_t^T]
  Matrix w_cur_prev;   ///< E[y_t y_{t-1}^T]
  Matrix w_next_prev;  ///< E[y_{t+1} y_{t-1}^T]
  /// Symmetrized views: y~_{t-1} = W(next,cur) W(prev,cur)^+ y_{t-1} and
  /// y~_t = W(next,prev) W(cur,prev)^+ y_t, both with conditional mean A3 e_m.
  Matrix m2;  ///< E[y~_{t-1} y~_t^T]
  Tensor3 m3; ///< E[y~_{t-1} ⊗ y~_t ⊗ y_{t+1}]
  std::size_t n_triples = 0;  ///< 0 for population moments
};

/// Builds MomentStats from triples. Pseudo-inverses are truncated to rank
/// `states`; throws IllConditionedMoments if any W has numerical rank < states.
MomentStats estimate_moments(std::span<const ObservationTriple> triples, int num_arms, int states);

/// Conditional observation matrices of the stationary chain under uniform
/// arm choice: A1(s,m) = P(S_{t-1}=s | M_t=m), A2 for S_t, A3 for S_{t+1}.
struct PopulationViews {
  Matrix a1;
  Matrix a2;
  Matrix a3;
  Vector stationary;
};

PopulationViews population_views(const HmmBanditModel& model);

/// Closed-form population moments under uniform arms (test oracle).
MomentStats population_moments(const HmmBanditModel& model);

struct TensorPowerOptions {
  int restarts = 30;
  int iterations = 100;
  double tolerance = 1e-10;
  /// The refined top restart must move by less than this on its last step.
  double convergence_check = 1e-6;
  double whitening_floor = 1e-10;
};

struct TensorDecomposition {
  Matrix columns;  ///< S x k, un-whitened components
  Vector weights;  ///< mixing weights (1 / lambda^2)
  double residual = 0.0;               ///< |M3 - sum w_m b_m^{⊗3}|_F
  double whitening_condition = 0.0;    ///< ratio of largest to k-th eigenvalue of M2
};

/// Whitening from the top-k eigenpairs of (M2 + M2^T)/2, robust tensor
/// power method with random restarts and deflation, then un-whitening.
TensorDecomposition tensor_decompose(const Matrix& m2, const Tensor3& m3, int rank, RngStream& rng,
                                     const TensorPowerOptions& options = {});

struct EstimateBounds {
  double mu_floor = 0.01;
  double p_floor = 1e-3;
};

struct SpectralEstimate {
  Matrix mu_hat;  ///< M x I
  Matrix p_hat;   ///< M x M
  Matrix a_hat;   ///< S x M, observation probabilities given the state
  Matrix b_hat;   ///< S x M, next-observation probabilities given the state
  double residual = 0.0;
  double whitening_condition = 0.0;
};

/// Recovers the per-state observation matrix from the decomposed
/// components, reads mu off per-arm reward ratios and P from
/// (A^+ B)^T, then clips mu and projects each row of P onto the floored simplex.
SpectralEstimate recover_parameters(const Matrix& b_hat, const MomentStats& moments, int states, int num_arms,
                                    const EstimateBounds& bounds = {});

struct ConfidenceRegion {
  Matrix mu_center;
  Matrix p_center;
  double radius_mu_row = 0.0;  ///< l2 radius for every row of mu
  double radius_p = 0.0;       ///< spectral-norm radius for P
  double delta = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  std::size_t samples = 0;
};

/// sqrt(log(6 (S^2 + S) / delta) / n)
double confidence_factor(int alphabet, double delta, std::size_t samples);

ConfidenceRegion confidence_region(const SpectralEstimate& estimate, std::size_t samples, double delta, double c1,
                                   double c2);

/// Permutation `perm` minimizing sum_m |mu_hat.row(perm[m]) - mu_ref.row(m)|_2,
/// by exhaustive search (M <= 8). Evaluation only.
std::vector<int> align_permutation(const Matrix& mu_hat, const Matrix& mu_ref);

/// Relabels states: out.row(m) = mu.row(perm[m]), out(m, n) = P(perm[m], perm[n]).
Matrix permute_rows(const Matrix& mu, std::span<const int> perm);
Matrix permute_states(const Matrix& p, std::span<const int> perm);

struct SpectralOptions {
  TensorPowerOptions power;
  EstimateBounds bounds;
};

struct SpectralResult {
  SpectralEstimate estimate;
  std::size_t n_triples = 0;
};

/// Full pipeline over all exploration segments.
SpectralResult spectral_estimate(std::span<const ExplorationSegment> segments, int states, int num_arms, RngStream& rng,
                                 const SpectralOptions& options = {});

}  // namespace rsb
