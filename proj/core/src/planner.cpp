#include "rsbandit/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rsbandit/belief.hpp"
#include "rsbandit/errors.hpp"
#include "rsbandit/linalg.hpp"

namespace rsb {

namespace {

constexpr std::size_t kSpanHistory = 32;

void enumerate(int dimension, int remaining, int position, std::vector<int>& current, std::vector<int>& out) {
  if (position == dimension - 1) {
    current[position] = remaining;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    current[position] = c;
    enumerate(dimension, remaining - c, position + 1, current, out);
  }
}

}  // namespace

std::size_t simplex_grid_size(int dimension, int resolution) {
  if (dimension < 1 || resolution < 0) return 0;
  // C(d + M - 1, M - 1) computed incrementally; each partial product is an
  // exact binomial coefficient.
  const std::size_t cap = std::numeric_limits<std::size_t>::max();
  std::size_t result = 1;
  const auto n = static_cast<std::size_t>(resolution);
  for (std::size_t k = 1; k < static_cast<std::size_t>(dimension); ++k) {
    const std::size_t factor = n + k;
    if (result > cap / factor) return cap;
    result = result * factor / k;
  }
  return result;
}

SimplexGrid::SimplexGrid(int dimension, int resolution, std::size_t max_points)
    : dimension_(dimension), resolution_(resolution) {
  if (dimension < 1 || resolution < 1) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("simplex grid needs M >= 1 and d >= 1 (got M={}, d={})", dimension, resolution));
  }
  size_ = simplex_grid_size(dimension, resolution);
  if (size_ > max_points) {
    throw Error(ErrorCode::GridTooLarge,
                fmt::format("simplex grid M={} d={} has {} points, budget is {}", dimension, resolution, size_,
                            max_points));
  }
  parts_.reserve(size_ * static_cast<std::size_t>(dimension));
  std::vector<int> current(static_cast<std::size_t>(dimension), 0);
  enumerate(dimension, resolution, 0, current, parts_);
  coords_.resize(parts_.size());
  for (std::size_t j = 0; j < parts_.size(); ++j) coords_[j] = static_cast<double>(parts_[j]) / resolution;
  std::vector<double> uniform(static_cast<std::size_t>(dimension), 1.0 / dimension);
  reference_ = nearest(uniform);
}

std::size_t SimplexGrid::index_of(std::span<const int> parts) const {
  std::size_t lo = 0;
  std::size_t hi = size_;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const auto c = composition(mid);
    if (std::lexicographical_compare(c.begin(), c.end(), parts.begin(), parts.end())) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::size_t SimplexGrid::nearest(std::span<const double> b) const {
  if (static_cast<int>(b.size()) != dimension_) {
    throw Error(ErrorCode::InvalidArgument, "belief dimension does not match the grid");
  }
  if (dimension_ == 1) return 0;
  if (dimension_ == 2) {
    const double x = std::clamp(b[0], 0.0, 1.0) * resolution_;
    return static_cast<std::size_t>(std::clamp<long>(std::lround(x), 0, resolution_));
  }
  int parts_buf[64];
  double frac_buf[64];
  std::vector<int> parts_heap;
  std::vector<double> frac_heap;
  int* parts = parts_buf;
  double* frac = frac_buf;
  if (dimension_ > 64) {
    parts_heap.resize(static_cast<std::size_t>(dimension_));
    frac_heap.resize(static_cast<std::size_t>(dimension_));
    parts = parts_heap.data();
    frac = frac_heap.data();
  }
  int assigned = 0;
  for (int m = 0; m < dimension_; ++m) {
    const double x = std::max(0.0, b[static_cast<std::size_t>(m)]) * resolution_;
    parts[m] = static_cast<int>(std::floor(x));
    frac[m] = x - parts[m];
    assigned += parts[m];
  }
  int remainder = resolution_ - assigned;
  // Largest remainders first; stable ordering keeps ties on the lower index.
  std::vector<int> order(static_cast<std::size_t>(dimension_));
  std::iota(order.begin(), order.end(), 0);
  if (remainder > 0) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return frac[a] > frac[c]; });
    for (int j = 0; remainder > 0; j = (j + 1) % dimension_, --remainder) ++parts[order[static_cast<std::size_t>(j)]];
  } else if (remainder < 0) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return frac[a] < frac[c]; });
    for (int j = 0; remainder < 0; j = (j + 1) % dimension_) {
      int& p = parts[order[static_cast<std::size_t>(j)]];
      if (p > 0) {
        --p;
        ++remainder;
      }
    }
  }
  return index_of(std::span<const int>(parts, static_cast<std::size_t>(dimension_)));
}

SimplexGrid::Location SimplexGrid::locate(std::span<const double> b) const {
  if (dimension_ == 2) {
    const double x = std::clamp(b[0], 0.0, 1.0) * resolution_;
    const auto lo = static_cast<std::size_t>(std::min(static_cast<int>(std::floor(x)), resolution_ - 1));
    return {lo, lo + 1, x - static_cast<double>(lo)};
  }
  const std::size_t k = nearest(b);
  return {k, k, 0.0};
}

std::shared_ptr<const SimplexGrid> build_simplex_grid(int dimension, int resolution, std::size_t max_points) {
  return std::make_shared<const SimplexGrid>(dimension, resolution, max_points);
}

int default_grid_resolution(int states) {
  if (states <= 2) return 100;
  if (states == 3) return 20;
  int d = 20;
  while (d > 1 && simplex_grid_size(states, d) > 200000) --d;
  return d;
}

namespace {

double interpolate(const std::vector<double>& h, const SimplexGrid::Location& loc) {
  return h[loc.lo] + loc.weight_hi * (h[loc.hi] - h[loc.lo]);
}

/// Successor table: for each (point, arm, reward) the reward probability and
/// the grid location of the updated belief.
struct Transitions {
  int arms = 0;
  std::vector<double> reward;  // size N * I
  std::vector<double> prob;    // size N * I * 2
  std::vector<SimplexGrid::Location> next;
};

Transitions tabulate(const HmmBanditModel& model, const SimplexGrid& grid, double shift) {
  Transitions t;
  const int arms = model.arms();
  const std::size_t n = grid.size();
  t.arms = arms;
  t.reward.resize(n * arms);
  t.prob.resize(n * arms * 2);
  t.next.resize(n * arms * 2);
  std::vector<double> out(static_cast<std::size_t>(model.states()));
  for (std::size_t k = 0; k < n; ++k) {
    const auto b = grid.point(k);
    for (int i = 0; i < arms; ++i) {
      const std::size_t ki = k * arms + i;
      const double p1 = expected_reward(model, b, i);
      t.reward[ki] = p1 + shift;
      for (int r = 0; r < 2; ++r) {
        const double pr = r == 1 ? p1 : 1.0 - p1;
        t.prob[ki * 2 + r] = pr;
        if (pr <= 0.0) {
          t.next[ki * 2 + r] = {k, k, 0.0};
          continue;
        }
        belief_update_into(model, b, i, r, out);
        t.next[ki * 2 + r] = grid.locate(out);
      }
    }
  }
  return t;
}

}  // namespace

PlannerSolution solve_average_reward(const HmmBanditModel& model, std::shared_ptr<const SimplexGrid> grid,
                                     const PlannerOptions& options) {
  if (!grid) throw Error(ErrorCode::InvalidArgument, "planner requires a grid");
  if (grid->dimension() != model.states()) {
    throw Error(ErrorCode::InvalidArgument, "grid dimension does not match the number of states");
  }
  if (!(model.epsilon() > 0.0)) {
    throw Error(ErrorCode::ZeroTransitionEntry, "average-reward planning needs every transition entry positive");
  }
  if (!(options.tolerance > 0.0) || options.max_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "planner tolerance must be positive and max_iterations >= 1");
  }

  const Transitions table = tabulate(model, *grid, options.reward_shift);
  const std::size_t n = grid->size();
  const int arms = model.arms();
  const std::size_t ref = grid->reference_index();

  PlannerSolution sol;
  sol.grid = grid;
  std::vector<double> h(n, 0.0);
  std::vector<double> next(n, 0.0);
  std::vector<double> history;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    double inc_min = std::numeric_limits<double>::infinity();
    double inc_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < arms; ++i) {
        const std::size_t ki = k * arms + i;
        const double q = table.reward[ki] + table.prob[ki * 2] * interpolate(h, table.next[ki * 2]) +
                         table.prob[ki * 2 + 1] * interpolate(h, table.next[ki * 2 + 1]);
        best = std::max(best, q);
      }
      next[k] = best;
      const double inc = best - h[k];
      inc_min = std::min(inc_min, inc);
      inc_max = std::max(inc_max, inc);
    }
    const double offset = next[ref];
    for (std::size_t k = 0; k < n; ++k) h[k] = next[k] - offset;
    const double span = inc_max - inc_min;
    history.push_back(span);
    if (history.size() > 2 * kSpanHistory) history.erase(history.begin(), history.end() - kSpanHistory);
    sol.iterations = iter;
    sol.increment_min = inc_min;
    sol.increment_max = inc_max;
    sol.residual_span = span;
    if (span <= options.tolerance) {
      sol.converged = true;
      break;
    }
  }
  if (history.size() > kSpanHistory) history.erase(history.begin(), history.end() - kSpanHistory);
  sol.span_history = std::move(history);
  sol.rho = 0.5 * (sol.increment_min + sol.increment_max);
  sol.bias = h;

  sol.policy.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < arms; ++i) {
      const std::size_t ki = k * arms + i;
      const double q = table.reward[ki] + table.prob[ki * 2] * interpolate(h, table.next[ki * 2]) +
                       table.prob[ki * 2 + 1] * interpolate(h, table.next[ki * 2 + 1]);
      if (q > best) {
        best = q;
        sol.policy[k] = i;
      }
    }
  }
  return sol;
}

double PlannerSolution::bias_at(std::span<const double> b) const {
  return interpolate(bias, grid->locate(b));
}

int PlannerSolution::act(const HmmBanditModel& model, std::span<const double> b) const {
  std::vector<double> out(static_cast<std::size_t>(model.states()));
  double best = -std::numeric_limits<double>::infinity();
  int arm = 0;
  for (int i = 0; i < model.arms(); ++i) {
    const double p1 = expected_reward(model, b, i);
    double q = p1;
    for (int r = 0; r < 2; ++r) {
      const double pr = r == 1 ? p1 : 1.0 - p1;
      if (pr <= 0.0) continue;
      belief_update_into(model, b, i, r, out);
      q += pr * bias_at(out);
    }
    if (q > best) {
      best = q;
      arm = i;
    }
  }
  return arm;
}

double bias_span_bound(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("bias span bound needs epsilon in (0, 1/2], got {}", epsilon));
  }
  const double a = (1.0 - 2.0 * epsilon) / (1.0 - epsilon);
  const double one_minus = 1.0 - a;
  // log_a(x) = ln x / ln a tends to 0 as a -> 0 for fixed x in (0, 1).
  const double log_term = a <= 0.0 ? 0.0 : std::log(one_minus / 8.0) / std::log(a);
  return 8.0 * (2.0 / (one_minus * one_minus) + (1.0 + a) * log_term) / one_minus;
}

double bias_span(const PlannerSolution& solution) {
  if (solution.bias.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(solution.bias.begin(), solution.bias.end());
  return *hi - *lo;
}

namespace {

std::vector<long long> cache_key(const HmmBanditModel& model, const SimplexGrid& grid, const PlannerOptions& options) {
  std::vector<long long> key;
  key.reserve(static_cast<std::size_t>(model.transition().size() + model.means().size() + 6));
  key.push_back(model.states());
  key.push_back(model.arms());
  key.push_back(grid.resolution());
  key.push_back(std::llround(options.tolerance * 1e12));
  key.push_back(options.max_iterations);
  key.push_back(std::llround(options.reward_shift * 1e9));
  for (Eigen::Index j = 0; j < model.transition().size(); ++j) key.push_back(std::llround(model.transition().data()[j] * 1e9));
  for (Eigen::Index j = 0; j < model.means().size(); ++j) key.push_back(std::llround(model.means().data()[j] * 1e9));
  return key;
}

}  // namespace

std::shared_ptr<const PlannerSolution> PlannerCache::solve(const HmmBanditModel& model,
                                                           const std::shared_ptr<const SimplexGrid>& grid,
                                                           const PlannerOptions& options) {
  auto key = cache_key(model, *grid, options);
  if (auto it = entries_.find(key); it != entries_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  auto sol = std::make_shared<const PlannerSolution>(solve_average_reward(model, grid, options));
  entries_.emplace(std::move(key), sol);
  return sol;
}

HmmBanditModel project_feasible(const Matrix& p, const Matrix& mu, const EstimateBounds& bounds) {
  Matrix mu_out = mu.cwiseMax(bounds.mu_floor).cwiseMin(1.0 - bounds.mu_floor);
  Matrix p_out(p.rows(), p.cols());
  for (Eigen::Index m = 0; m < p.rows(); ++m) {
    Vector row = p.row(m).transpose();
    p_out.row(m) = project_to_simplex(row, bounds.p_floor).transpose();
  }
  return HmmBanditModel(std::move(p_out), std::move(mu_out));
}

std::vector<HmmBanditModel> optimistic_candidates(const ConfidenceRegion& region, const OptimisticSearchOptions& options,
                                                  RngStream& rng) {
  const Matrix& mu = region.mu_center;
  const Matrix& p = region.p_center;
  const Eigen::Index states = mu.rows();
  const Eigen::Index arms = mu.cols();
  const double rmu = region.radius_mu_row;
  const double rp = region.radius_p;
  if (options.random_candidates < 0) throw Error(ErrorCode::InvalidArgument, "random candidate count must be >= 0");

  std::vector<HmmBanditModel> out;
  out.push_back(project_feasible(p, mu, options.bounds));
  for (Eigen::Index m = 0; m < states; ++m) {
    for (Eigen::Index i = 0; i < arms; ++i) {
      for (double sign : {1.0, -1.0}) {
        Matrix shifted = mu;
        shifted(m, i) += sign * rmu;
        out.push_back(project_feasible(p, shifted, options.bounds));
      }
    }
  }
  for (Eigen::Index m = 0; m < states; ++m) {
    for (Eigen::Index corner = 0; corner < states; ++corner) {
      Vector direction = -p.row(m).transpose();
      direction(corner) += 1.0;
      const double norm = direction.norm();
      Matrix moved = p;
      if (norm > 0.0) moved.row(m) += (std::min(rp, norm) / norm) * direction.transpose();
      out.push_back(project_feasible(moved, mu, options.bounds));
    }
  }
  for (int g = 0; g < options.random_candidates; ++g) {
    Matrix mu_s = mu;
    for (Eigen::Index m = 0; m < states; ++m) {
      Vector dir(arms);
      for (Eigen::Index i = 0; i < arms; ++i) dir(i) = rng.normal();
      const double norm = dir.norm();
      const double radius = rmu * std::pow(rng.uniform(), 1.0 / static_cast<double>(arms));
      if (norm > 0.0) mu_s.row(m) += (radius / norm) * dir.transpose();
    }
    Matrix noise(states, states);
    for (Eigen::Index j = 0; j < noise.size(); ++j) noise.data()[j] = rng.normal();
    const double sn = spectral_norm(noise);
    const double radius = rp * std::pow(rng.uniform(), 1.0 / static_cast<double>(states * states));
    Matrix p_s = p;
    if (sn > 0.0) p_s += (radius / sn) * noise;
    out.push_back(project_feasible(p_s, mu_s, options.bounds));
  }
  return out;
}

OptimisticChoice optimistic_model_search(const ConfidenceRegion& region, const std::shared_ptr<const SimplexGrid>& grid,
                                         const PlannerOptions& planner, const OptimisticSearchOptions& options,
                                         RngStream& rng, PlannerCache* cache) {
  const std::vector<HmmBanditModel> candidates = optimistic_candidates(region, options, rng);
  OptimisticChoice choice;
  PlannerCache local;
  PlannerCache& memo = cache != nullptr ? *cache : local;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    auto sol = memo.solve(candidates[j], grid, planner);
    ++choice.candidates_evaluated;
    if (!sol->converged) {
      ++choice.candidates_skipped;
      choice.warnings.push_back(fmt::format("candidate {} skipped: value iteration stopped at span {:.3g} after {} iterations",
                                            j, sol->residual_span, sol->iterations));
      continue;
    }
    if (!choice.solution || sol->rho > choice.rho) {
      choice.rho = sol->rho;
      choice.solution = sol;
      choice.model = candidates[j];
      choice.chosen_index = static_cast<int>(j);
    }
  }
  if (!choice.solution) {
    throw Error(ErrorCode::NotConverged, "value iteration failed for every optimistic candidate");
  }
  return choice;
}

}  // namespace rsb
