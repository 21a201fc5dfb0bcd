#include "rsbandit/seeu.hpp"

#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "rsbandit/belief.hpp"
#include "rsbandit/errors.hpp"

namespace rsb {

std::size_t exploitation_length(double tau2, int k) {
  return static_cast<std::size_t>(std::llround(tau2 * std::sqrt(static_cast<double>(k))));
}

double episode_delta(double delta, int k) {
  const double kk = k;
  return delta / (kk * kk * kk);
}

EpisodeSchedule episode_schedule(int tau1, double tau2, std::size_t horizon) {
  if (tau1 < 3) throw Error(ErrorCode::InvalidArgument, fmt::format("tau1 must be >= 3, got {}", tau1));
  if (!(tau2 >= 1.0) || !std::isfinite(tau2)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("tau2 must be >= 1, got {}", tau2));
  }
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");

  EpisodeSchedule schedule;
  schedule.tau1 = tau1;
  schedule.tau2 = tau2;
  schedule.horizon = horizon;
  std::size_t next = 1;
  for (int k = 1; next <= horizon; ++k) {
    Episode e;
    e.k = k;
    e.explore.first = next;
    e.explore.last = std::min(horizon, next + static_cast<std::size_t>(tau1) - 1);
    next = e.explore.last + 1;
    e.exploit.first = next;
    e.exploit.last = next <= horizon ? std::min(horizon, next + exploitation_length(tau2, k) - 1) : next - 1;
    next = e.exploit.last + 1;
    schedule.episodes.push_back(e);
  }
  return schedule;
}

double EpisodeSchedule::lower_count_bound() const {
  return std::pow(static_cast<double>(horizon) / (tau1 + tau2), 2.0 / 3.0);
}

double EpisodeSchedule::upper_count_bound() const {
  return 3.0 * std::pow(static_cast<double>(horizon) / tau2, 2.0 / 3.0);
}

bool EpisodeSchedule::within_count_bounds() const {
  if (static_cast<double>(horizon) < tau1 + tau2) return true;
  const auto k = static_cast<double>(count());
  return lower_count_bound() <= k && k <= upper_count_bound();
}

void validate_config(const SeeuConfig& c) {
  if (c.tau1 < 3) throw Error(ErrorCode::InvalidArgument, "tau1 must be >= 3");
  if (!(c.tau2 >= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau2 must be >= 1");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  if (!(c.c1 >= 0.0) || !(c.c2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "c1 and c2 must be >= 0");
  if (c.candidates < 0) throw Error(ErrorCode::InvalidArgument, "candidate count must be >= 0");
  if (c.grid_resolution < 0) throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 0");
}

std::uint64_t environment_seed(std::uint64_t seed) { return mix_seed({seed, 0x656e76ULL}); }

namespace {

struct WorkingModel {
  std::optional<HmmBanditModel> model;
  std::shared_ptr<const PlannerSolution> solution;
};

}  // namespace

RunLog run_seeu(const HmmBanditModel& truth, const SeeuConfig& config, std::size_t horizon, std::uint64_t seed,
                const SeeuHooks& hooks) {
  validate_config(config);
  const int states = truth.states();
  const int arms = truth.arms();
  const Belief b1 = config.initial_belief ? *config.initial_belief : Belief::uniform(states);
  if (b1.size() != states) throw Error(ErrorCode::InvalidArgument, "initial belief has the wrong dimension");
  if (hooks.injected_estimate &&
      (hooks.injected_estimate->states() != states || hooks.injected_estimate->arms() != arms)) {
    throw Error(ErrorCode::InvalidArgument, "injected model has the wrong shape");
  }

  const EpisodeSchedule schedule = episode_schedule(config.tau1, config.tau2, horizon);
  const int resolution = config.grid_resolution > 0 ? config.grid_resolution : default_grid_resolution(states);
  const auto grid = build_simplex_grid(states, resolution);

  Environment env(truth, stationary_distribution(truth.transition()), environment_seed(seed));
  RngStream agent(seed, Stream::Agent);
  RngStream planner_rng(seed, Stream::Planner);
  RngStream spectral_rng(seed, Stream::Spectral);
  PlannerCache cache;
  OptimisticSearchOptions search;
  search.random_candidates = config.candidates;
  search.bounds = config.spectral.bounds;

  RunLog log;
  log.states = states;
  log.arms = arms;
  log.steps.reserve(horizon);
  log.beliefs.reserve(horizon * static_cast<std::size_t>(states));

  std::vector<ExplorationSegment> segments;
  std::vector<ArmReward> history;
  history.reserve(horizon);
  std::vector<double> belief(b1.span().begin(), b1.span().end());
  std::vector<double> scratch(belief.size());
  WorkingModel working;

  auto step = [&](std::size_t t, int k, Phase phase, int arm) {
    const int reward = env.pull(arm);
    log.steps.push_back({t, k, phase, arm, reward});
    log.beliefs.insert(log.beliefs.end(), belief.begin(), belief.end());
    history.push_back({arm, reward});
    if (working.model) {
      belief_update_into(*working.model, belief, arm, reward, scratch);
      belief.swap(scratch);
    }
    return reward;
  };

  for (const Episode& ep : schedule.episodes) {
    EpisodeRecord rec;
    rec.k = ep.k;
    rec.explore_first = ep.explore.first;
    rec.explore_last = ep.explore.last;
    rec.exploit_first = ep.exploit.first;
    rec.exploit_last = ep.exploit.last;
    rec.delta_k = episode_delta(config.delta, ep.k);

    ExplorationSegment segment;
    segment.reserve(ep.explore.length());
    for (std::size_t t = ep.explore.first; t <= ep.explore.last; ++t) {
      const int arm = agent.uniform_int(arms);
      const int reward = step(t, ep.k, Phase::Explore, arm);
      segment.push_back({arm, reward});
    }
    segments.push_back(std::move(segment));
    for (const auto& s : segments) rec.estimator_samples += s.size();

    if (ep.exploit.empty()) {
      rec.note = "horizon reached during exploration";
      log.episodes.push_back(std::move(rec));
      continue;
    }

    try {
      ConfidenceRegion region;
      if (hooks.injected_estimate) {
        region.mu_center = hooks.injected_estimate->means();
        region.p_center = hooks.injected_estimate->transition();
        region.delta = rec.delta_k;
        rec.n_triples = collect_triples(segments, arms).size();
      } else {
        const SpectralResult est = spectral_estimate(segments, states, arms, spectral_rng, config.spectral);
        rec.n_triples = est.n_triples;
        region = confidence_region(est.estimate, est.n_triples, rec.delta_k, config.c1, config.c2);
      }
      rec.mu_hat = region.mu_center;
      rec.p_hat = region.p_center;
      rec.radius_mu = region.radius_mu_row;
      rec.radius_p = region.radius_p;
      rec.estimated = true;

      OptimisticChoice choice = optimistic_model_search(region, grid, config.planner, search, planner_rng, &cache);
      for (auto& w : choice.warnings) log.warnings.push_back(fmt::format("episode {}: {}", ep.k, w));
      rec.mu_opt = choice.model->means();
      rec.p_opt = choice.model->transition();
      rec.rho_k = choice.rho;
      rec.planner_residual = choice.solution->residual_span;
      rec.planner_iterations = choice.solution->iterations;
      rec.candidates_evaluated = choice.candidates_evaluated;
      rec.candidates_skipped = choice.candidates_skipped;
      working.model = std::move(choice.model);
      working.solution = std::move(choice.solution);

      // Recalibrate: replay the whole history from b1 under the new model.
      std::copy(b1.span().begin(), b1.span().end(), belief.begin());
      for (const auto& obs : history) {
        belief_update_into(*working.model, belief, obs.arm, obs.reward, scratch);
        belief.swap(scratch);
      }
    } catch (const Error& e) {
      rec.fallback = true;
      rec.note = fmt::format("fallback to uniform play: {} ({})", to_string(e.code()), e.what());
      log.warnings.push_back(fmt::format("episode {}: {}", ep.k, rec.note));
      working = {};
      std::copy(b1.span().begin(), b1.span().end(), belief.begin());
    }

    for (std::size_t t = ep.exploit.first; t <= ep.exploit.last; ++t) {
      const int arm = working.solution ? working.solution->act(*working.model, belief) : agent.uniform_int(arms);
      step(t, ep.k, Phase::Exploit, arm);
    }
    log.episodes.push_back(std::move(rec));
  }
  return log;
}

}  // namespace rsb
