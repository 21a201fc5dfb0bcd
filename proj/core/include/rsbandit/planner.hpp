#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsbandit/model.hpp"
#include "rsbandit/rng.hpp"
#include "rsbandit/spectral.hpp"

namespace rsb {

/// All beliefs whose components are multiples of 1/d, enumerated in
/// lexicographic order of their integer compositions. For M = 2 point k is
/// (k/d, 1 - k/d).
class SimplexGrid {
 public:
  SimplexGrid(int dimension, int resolution, std::size_t max_points = 200000);

  int dimension() const noexcept { return dimension_; }
  int resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return size_; }

  std::span<const double> point(std::size_t k) const {
    return {coords_.data() + k * static_cast<std::size_t>(dimension_), static_cast<std::size_t>(dimension_)};
  }
  std::span<const int> composition(std::size_t k) const {
    return {parts_.data() + k * static_cast<std::size_t>(dimension_), static_cast<std::size_t>(dimension_)};
  }

  /// Grid point nearest to `b` in l1 (largest-remainder rounding, ties to
  /// the lower component index).
  std::size_t nearest(std::span<const double> b) const;

  /// Successor lookup used by value iteration: linear interpolation between
  /// two neighbours for M = 2, nearest point (weight 0) otherwise.
  struct Location {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double weight_hi = 0.0;
  };
  Location locate(std::span<const double> b) const;

  /// Grid point nearest the uniform belief.
  std::size_t reference_index() const noexcept { return reference_; }

 private:
  std::size_t index_of(std::span<const int> parts) const;

  int dimension_;
  int resolution_;
  std::size_t size_ = 0;
  std::vector<int> parts_;
  std::vector<double> coords_;
  std::size_t reference_ = 0;
};

/// Number of grid points C(d + M - 1, M - 1), saturating at SIZE_MAX.
std::size_t simplex_grid_size(int dimension, int resolution);

/// Throws GridTooLarge above `max_points`.
std::shared_ptr<const SimplexGrid> build_simplex_grid(int dimension, int resolution, std::size_t max_points = 200000);

/// Default resolution per state count: 100 for M = 2, 20 for M = 3, and a
/// coarser value for larger M so the grid stays within the point budget.
int default_grid_resolution(int states);

struct PlannerOptions {
  double tolerance = 1e-6;
  int max_iterations = 100000;
  /// Added to every expected reward; used to check shift invariance.
  double reward_shift = 0.0;
};

struct PlannerSolution {
  std::shared_ptr<const SimplexGrid> grid;
  double rho = 0.0;
  std::vector<double> bias;
  std::vector<int> policy;
  double residual_span = 0.0;
  double increment_min = 0.0;
  double increment_max = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Span of the one-step increment for the most recent iterations.
  std::vector<double> span_history;

  /// Greedy arm at an arbitrary belief using the interpolated bias
  /// (identical to `policy` on grid points).
  int act(const HmmBanditModel& model, std::span<const double> b) const;
  double bias_at(std::span<const double> b) const;
};

/// Relative value iteration for the average-reward belief MDP on `grid`.
/// Does not throw on non-convergence: returns the last iterate with
/// `converged == false`. Throws ZeroTransitionEntry when epsilon == 0.
PlannerSolution solve_average_reward(const HmmBanditModel& model, std::shared_ptr<const SimplexGrid> grid,
                                     const PlannerOptions& options = {});

/// Uniform bound on the bias span for minimum transition probability eps:
/// D = 8 (2/(1-a)^2 + (1+a) log_a((1-a)/8)) / (1-a), a = (1-2 eps)/(1-eps).
double bias_span_bound(double epsilon);

double bias_span(const PlannerSolution& solution);

/// Memoizes planner solutions keyed by the model parameters at 1e-9 resolution.
class PlannerCache {
 public:
  std::shared_ptr<const PlannerSolution> solve(const HmmBanditModel& model, const std::shared_ptr<const SimplexGrid>& grid,
                                               const PlannerOptions& options);
  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::map<std::vector<long long>, std::shared_ptr<const PlannerSolution>> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct OptimisticSearchOptions {
  int random_candidates = 64;
  EstimateBounds bounds;
};

/// Feasible model closest to (mu, P): mu clipped into [mu_floor, 1 - mu_floor],
/// rows of P projected onto the simplex with entry floor p_floor.
HmmBanditModel project_feasible(const Matrix& p, const Matrix& mu, const EstimateBounds& bounds);

/// Deterministic candidates (center, coordinate extremes of mu, rows of P
/// pushed toward each corner) followed by seeded random draws in the region.
std::vector<HmmBanditModel> optimistic_candidates(const ConfidenceRegion& region, const OptimisticSearchOptions& options,
                                                  RngStream& rng);

struct OptimisticChoice {
  std::optional<HmmBanditModel> model;
  double rho = 0.0;
  std::shared_ptr<const PlannerSolution> solution;
  int candidates_evaluated = 0;
  int candidates_skipped = 0;
  int chosen_index = 0;
  std::vector<std::string> warnings;
};

/// Plans every candidate and keeps the largest rho (ties: lowest index).
OptimisticChoice optimistic_model_search(const ConfidenceRegion& region, const std::shared_ptr<const SimplexGrid>& grid,
                                         const PlannerOptions& planner, const OptimisticSearchOptions& options,
                                         RngStream& rng, PlannerCache* cache = nullptr);

}  // namespace rsb
