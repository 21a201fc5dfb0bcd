#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rsbandit/baselines.hpp"
#include "rsbandit/belief.hpp"
#include "rsbandit/bench.hpp"
#include "rsbandit/errors.hpp"
#include "rsbandit/model_io.hpp"
#include "rsbandit/planner.hpp"
#include "rsbandit/seeu.hpp"
#include "rsbandit/spectral.hpp"

namespace rsb::cli {

namespace {

std::string matrix_text(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += "  ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += fmt::format("{:>10.6f}", m(r, c));
    out += '\n';
  }
  return out;
}

double true_rho(const HmmBanditModel& model, int resolution) {
  const int d = resolution > 0 ? resolution : default_grid_resolution(model.states());
  return solve_average_reward(model, build_simplex_grid(model.states(), d)).rho;
}

/// Reads the arm/reward columns of a trajectory CSV written by `simulate`.
ExplorationSegment read_trajectory(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  int arm_col = -1;
  int reward_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "arm") arm_col = static_cast<int>(j);
    if (header[j] == "reward") reward_col = static_cast<int>(j);
  }
  if (arm_col < 0 || reward_col < 0) throw Error(ErrorCode::ParseError, "trajectory CSV needs 'arm' and 'reward' columns");
  ExplorationSegment seg;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= std::max(arm_col, reward_col)) {
      throw Error(ErrorCode::ParseError, fmt::format("trajectory CSV row {} is short", row));
    }
    const int arm = static_cast<int>(parse_number(cells[static_cast<std::size_t>(arm_col)])) - 1;
    const int reward = static_cast<int>(parse_number(cells[static_cast<std::size_t>(reward_col)]));
    if (arm < 0 || (reward != 0 && reward != 1)) {
      throw Error(ErrorCode::ParseError, fmt::format("trajectory CSV row {} has an invalid arm or reward", row));
    }
    seg.push_back({arm, reward});
  }
  return seg;
}

void add_simulate(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string model, out, beliefs, policy = "uniform";
    std::size_t horizon = 1000;
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("simulate", "Sample a trajectory from a model");
  sub->add_option("--model", o->model, "Model file")->required()->check(CLI::ExistingFile);
  sub->add_option("--T", o->horizon, "Number of periods")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Seed");
  sub->add_option("--policy", o->policy, "'uniform' or 'arm:<k>' (1-based)");
  sub->add_option("--out", o->out, "Trajectory CSV (t,state,arm,reward)")->required();
  sub->add_option("--beliefs", o->beliefs, "Optional belief-history CSV under the true model");
  sub->callback([o, &exit_code] {
    const ModelFile file = load_model(o->model);
    const int arms = file.model.arms();
    ArmPolicy policy;
    if (o->policy == "uniform") {
      policy = uniform_arm_policy(arms);
    } else if (o->policy.rfind("arm:", 0) == 0) {
      const int arm = static_cast<int>(parse_number(o->policy.substr(4))) - 1;
      if (arm < 0 || arm >= arms) throw Error(ErrorCode::InvalidArgument, "fixed arm out of range");
      policy = [arm](const Trajectory&, RngStream&) { return arm; };
    } else {
      throw Error(ErrorCode::InvalidArgument, fmt::format("unknown policy '{}'", o->policy));
    }
    const Trajectory path = sample_trajectory(file.model, policy, o->horizon, o->seed, file.initial_belief);
    std::string csv = "t,state,arm,reward\n";
    for (std::size_t t = 0; t < path.size(); ++t) {
      csv += fmt::format("{},{},{},{}\n", t + 1, path.states[t] + 1, path.arms[t] + 1, int(path.rewards[t]));
    }
    write_text_file(o->out, csv);
    if (!o->beliefs.empty()) {
      std::vector<ArmReward> history;
      for (std::size_t t = 0; t < path.size(); ++t) history.push_back({path.arms[t], path.rewards[t]});
      const Belief b1 = file.initial_belief ? *file.initial_belief : Belief::uniform(file.model.states());
      std::ostringstream out;
      replay_beliefs(file.model, b1, history).write_csv(out);
      write_text_file(o->beliefs, out.str());
    }
    double total = 0.0;
    for (auto r : path.rewards) total += r;
    std::cout << fmt::format("periods {}  mean reward {:.6f}\n", path.size(), total / static_cast<double>(path.size()));
    exit_code = 0;
  });
}

void add_estimate(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string model, trajectory, out, moments;
    int states = 0;
    std::size_t samples = 200000;
    std::uint64_t seed = 1;
    double delta = 0.05, c1 = 1.0, c2 = 1.0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("estimate", "Spectral estimate of (mu, P) from uniformly explored data");
  sub->add_option("--model", o->model, "Model to simulate from (and compare against)")->check(CLI::ExistingFile);
  sub->add_option("--trajectory", o->trajectory, "Trajectory CSV to estimate from instead of simulating")
      ->check(CLI::ExistingFile);
  sub->add_option("--states", o->states, "Number of hidden states (defaults to the model's)");
  sub->add_option("--samples", o->samples, "Samples to simulate")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Seed");
  sub->add_option("--delta", o->delta, "Confidence level");
  sub->add_option("--c1", o->c1, "Radius constant for mu");
  sub->add_option("--c2", o->c2, "Radius constant for P");
  sub->add_option("--out", o->out, "Estimated model file (radii recorded as comments)");
  sub->add_option("--dump-moments", o->moments, "CSV of the empirical W matrices and M2 (name,row,col,value)");
  sub->callback([o, &exit_code] {
    std::optional<ModelFile> file;
    if (!o->model.empty()) file = load_model(o->model);
    ExplorationSegment data;
    int arms = 0;
    if (!o->trajectory.empty()) {
      data = read_trajectory(o->trajectory);
      for (const auto& x : data) arms = std::max(arms, x.arm + 1);
      if (file) arms = file->model.arms();
    } else {
      if (!file) throw Error(ErrorCode::InvalidArgument, "estimate needs --model or --trajectory");
      const Trajectory path = sample_trajectory(file->model, uniform_arm_policy(file->model.arms()), o->samples, o->seed);
      for (std::size_t t = 0; t < path.size(); ++t) data.push_back({path.arms[t], path.rewards[t]});
      arms = file->model.arms();
    }
    const int states = o->states > 0 ? o->states : (file ? file->model.states() : 0);
    if (states < 1) throw Error(ErrorCode::InvalidArgument, "--states is required without --model");
    RngStream rng(o->seed, Stream::Spectral);
    const std::vector<ExplorationSegment> segments{data};
    const SpectralResult est = spectral_estimate(segments, states, arms, rng);
    const ConfidenceRegion region = confidence_region(est.estimate, est.n_triples, o->delta, o->c1, o->c2);
    Matrix mu = est.estimate.mu_hat;
    Matrix p = est.estimate.p_hat;
    if (file) {
      const auto perm = align_permutation(mu, file->model.means());
      mu = permute_rows(mu, perm);
      p = permute_states(p, perm);
    }
    std::cout << fmt::format("triples {}\nmu_hat\n{}P_hat\n{}radius_mu {:.6g}  radius_P {:.6g}\n", est.n_triples,
                             matrix_text(mu), matrix_text(p), region.radius_mu_row, region.radius_p);
    if (file) {
      std::cout << fmt::format("aligned error  |mu|_inf {:.6g}  |P|_inf {:.6g}\n",
                               (mu - file->model.means()).cwiseAbs().maxCoeff(),
                               (p - file->model.transition()).cwiseAbs().maxCoeff());
    }
    if (!o->out.empty()) {
      std::string text = format_model(HmmBanditModel(p, mu));
      text += fmt::format("# n_triples = {}\n# radius_mu = {}\n# radius_P = {}\n# delta = {}\n", est.n_triples,
                          format_double(region.radius_mu_row), format_double(region.radius_p), format_double(o->delta));
      write_text_file(o->out, text);
    }
    if (!o->moments.empty()) {
      const MomentStats m = estimate_moments(collect_triples(segments, arms), arms, states);
      std::string csv = "name,row,col,value\n";
      const std::pair<const char*, const Matrix*> named[] = {
          {"W_prev_cur", &m.w_prev_cur}, {"W_next_cur", &m.w_next_cur}, {"W_next_prev", &m.w_next_prev}, {"M2", &m.m2}};
      for (const auto& [name, mat] : named)
        for (Eigen::Index r = 0; r < mat->rows(); ++r)
          for (Eigen::Index c = 0; c < mat->cols(); ++c)
            csv += fmt::format("{},{},{},{}\n", name, r + 1, c + 1, format_double((*mat)(r, c)));
      write_text_file(o->moments, csv);
    }
    exit_code = 0;
  });
}

void add_plan(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string model, out;
    int grid = 0;
    double tol = 1e-6;
    int max_iter = 100000;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("plan", "Solve the average-reward belief MDP on a grid");
  sub->add_option("--model", o->model, "Model file")->required()->check(CLI::ExistingFile);
  sub->add_option("--grid", o->grid, "Grid resolution d (default 100 for M=2, 20 for M=3)");
  sub->add_option("--tol", o->tol, "Stopping tolerance on the increment span");
  sub->add_option("--max-iter", o->max_iter, "Iteration cap");
  sub->add_option("--out", o->out, "Policy table CSV (b1..bM, arm, h)");
  sub->callback([o, &exit_code] {
    const ModelFile file = load_model(o->model);
    const int states = file.model.states();
    const int d = o->grid > 0 ? o->grid : default_grid_resolution(states);
    PlannerOptions opts;
    opts.tolerance = o->tol;
    opts.max_iterations = o->max_iter;
    const PlannerSolution sol = solve_average_reward(file.model, build_simplex_grid(states, d), opts);
    std::cout << fmt::format("rho {}\nspan_h {}\nresidual_span {}\niterations {}\nconverged {}\ngrid_points {}\n",
                             format_double(sol.rho), format_double(bias_span(sol)), format_double(sol.residual_span),
                             sol.iterations, sol.converged ? "yes" : "no", sol.grid->size());
    if (file.model.epsilon() > 0.0 && file.model.epsilon() <= 0.5) {
      std::cout << "span_bound " << format_double(bias_span_bound(file.model.epsilon())) << '\n';
    }
    if (!o->out.empty()) {
      std::string csv;
      for (int m = 0; m < states; ++m) csv += fmt::format("b{},", m + 1);
      csv += "arm,h\n";
      for (std::size_t k = 0; k < sol.grid->size(); ++k) {
        for (double v : sol.grid->point(k)) csv += format_double(v) + ",";
        csv += fmt::format("{},{}\n", sol.policy[k] + 1, format_double(sol.bias[k]));
      }
      write_text_file(o->out, csv);
    }
    exit_code = sol.converged ? 0 : 3;
  });
}

void add_seeu(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string model, out;
    std::size_t horizon = 10000;
    SeeuConfig config;
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("seeu", "Run the SEEU agent");
  sub->add_option("--model", o->model, "True model file (hidden from the agent)")->required()->check(CLI::ExistingFile);
  sub->add_option("--T", o->horizon, "Horizon")->check(CLI::PositiveNumber);
  sub->add_option("--tau1", o->config.tau1, "Exploration length per episode");
  sub->add_option("--tau2", o->config.tau2, "Exploitation scale");
  sub->add_option("--delta", o->config.delta, "Confidence level");
  sub->add_option("--c1", o->config.c1, "Radius constant for mu");
  sub->add_option("--c2", o->config.c2, "Radius constant for P");
  sub->add_option("--grid", o->config.grid_resolution, "Planner grid resolution (0: default)");
  sub->add_option("--candidates", o->config.candidates, "Random candidates in the optimistic search");
  sub->add_option("--seed", o->seed, "Seed");
  sub->add_option("--out", o->out, "Output directory for steps.csv and episodes.csv");
  sub->callback([o, &exit_code] {
    const ModelFile file = load_model(o->model);
    SeeuConfig config = o->config;
    config.initial_belief = file.initial_belief;
    const RunLog log = run_seeu(file.model, config, o->horizon, o->seed);
    const double rho = true_rho(file.model, 0);
    std::size_t fallbacks = 0;
    for (const auto& e : log.episodes) fallbacks += e.fallback ? 1 : 0;
    std::cout << fmt::format("episodes {}\nfallbacks {}\ntotal_reward {}\nrho_star {}\nfinal_regret {}\n",
                             log.episodes.size(), fallbacks, format_double(log.total_reward()), format_double(rho),
                             format_double(regret(log, rho).back()));
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << '\n';
    if (!o->out.empty()) {
      std::ostringstream steps;
      log.write_steps_csv(steps);
      write_text_file(std::filesystem::path(o->out) / "steps.csv", steps.str());
      std::ostringstream episodes;
      log.write_episodes_csv(episodes);
      write_text_file(std::filesystem::path(o->out) / "episodes.csv", episodes.str());
    }
    exit_code = 0;
  });
}

void add_baseline(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string model, out, kind = "epsilon_greedy";
    std::size_t horizon = 10000;
    BaselineConfig config;
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("baseline", "Run a baseline or reference policy");
  sub->add_option("--kind", o->kind, "epsilon_greedy | sw_ucb | ucb | exp3s | best_fixed_arm | full_info_oracle");
  sub->add_option("--model", o->model, "True model file")->required()->check(CLI::ExistingFile);
  sub->add_option("--T", o->horizon, "Horizon")->check(CLI::PositiveNumber);
  sub->add_option("--epsilon", o->config.epsilon, "Exploration probability for epsilon_greedy");
  sub->add_option("--window", o->config.window, "SW-UCB window (0: T^(2/3))");
  sub->add_option("--xi", o->config.ucb_xi, "UCB exploration constant");
  sub->add_option("--B", o->config.ucb_bound, "UCB reward bound");
  sub->add_option("--gamma", o->config.gamma, "Exp3.S mixing (default from L)");
  sub->add_option("--alpha", o->config.alpha, "Exp3.S drift (default 1/T)");
  sub->add_option("--L", o->config.hardness, "Exp3.S hardness (default T)");
  sub->add_option("--seed", o->seed, "Seed");
  sub->add_option("--out", o->out, "Steps CSV");
  sub->callback([o, &exit_code] {
    const ModelFile file = load_model(o->model);
    BaselineConfig config = o->config;
    config.kind = parse_baseline_kind(o->kind);
    const RunLog log = run_baseline(file.model, config, o->horizon, o->seed);
    const double rho = true_rho(file.model, 0);
    std::cout << fmt::format("kind {}\ntotal_reward {}\nrho_star {}\nfinal_regret {}\n", o->kind,
                             format_double(log.total_reward()), format_double(rho),
                             format_double(regret(log, rho).back()));
    if (!o->out.empty()) {
      std::ostringstream steps;
      log.write_steps_csv(steps);
      write_text_file(o->out, steps.str());
    }
    exit_code = 0;
  });
}

void add_bench(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string config, out;
    int workers = -1;
    bool quiet = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bench", "Run a regret-versus-T experiment");
  sub->add_option("--config", o->config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->add_option("--workers", o->workers, "Override the worker count");
  sub->add_flag("--quiet", o->quiet, "No progress output");
  sub->callback([o, &exit_code] {
    ExperimentConfig config = load_experiment_config(o->config);
    if (o->workers >= 0) config.workers = o->workers;
    ProgressFn progress;
    if (!o->quiet) {
      progress = [](std::size_t done, std::size_t total) {
        if (done == total || done % 10 == 0) std::cerr << fmt::format("\r{}/{} runs", done, total) << std::flush;
        if (done == total) std::cerr << '\n';
      };
    }
    const ExperimentResult result = run_experiment(config, progress);
    write_experiment(config, result, o->out);
    std::cout << fmt::format("rho_star {} (half-grid difference {:.3g})\n", format_double(result.rho_star),
                             result.discretization_estimate());
    for (const auto& s : result.slopes) {
      std::cout << fmt::format("slope {:<20} {:.3f} +- {:.3f}\n", s.algorithm, s.fit.slope, s.fit.stderr_slope);
    }
    for (const auto& v : result.violations) std::cerr << "violation: " << v << '\n';
    exit_code = result.violations.empty() ? 0 : 3;
  });
}

void add_slope(CLI::App& app, int& exit_code) {
  struct Opts {
    std::string input, algo, points;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("slope", "Fit log-log slopes to (T, mean regret) points");
  sub->add_option("--input", o->input, "summary.csv from bench")->check(CLI::ExistingFile);
  sub->add_option("--algo", o->algo, "Restrict to one algorithm");
  sub->add_option("--points", o->points, "Inline points 'T:y,T:y,...'");
  sub->callback([o, &exit_code] {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
    auto series_for = [&](const std::string& name) -> std::vector<std::pair<double, double>>& {
      for (auto& s : series) {
        if (s.first == name) return s.second;
      }
      series.emplace_back(name, std::vector<std::pair<double, double>>{});
      return series.back().second;
    };
    if (!o->points.empty()) {
      std::stringstream ss(o->points);
      std::string item;
      auto& pts = series_for(o->algo.empty() ? "points" : o->algo);
      while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::ParseError, fmt::format("bad point '{}'", item));
        pts.emplace_back(parse_number(item.substr(0, colon)), parse_number(item.substr(colon + 1)));
      }
    } else if (!o->input.empty()) {
      std::istringstream in(read_text_file(o->input));
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) continue;
        if (!o->algo.empty() && cells[0] != o->algo) continue;
        series_for(cells[0]).emplace_back(parse_number(cells[1]), parse_number(cells[2]));
      }
    } else {
      throw Error(ErrorCode::InvalidArgument, "slope needs --input or --points");
    }
    std::cout << "algo,slope,stderr,intercept,points\n";
    exit_code = 0;
    for (const auto& [name, pts] : series) {
      try {
        const SlopeFit fit = loglog_slope(pts);
        for (const auto& w : fit.warnings) std::cerr << "warning: " << name << ": " << w << '\n';
        std::cout << fmt::format("{},{},{},{},{}\n", name, format_double(fit.slope), format_double(fit.stderr_slope),
                                 format_double(fit.intercept), fit.points);
      } catch (const Error& e) {
        std::cerr << "error: " << name << ": " << e.what() << '\n';
        exit_code = 2;
      }
    }
  });
}

}  // namespace

void register_commands(CLI::App& app, int& exit_code) {
  add_simulate(app, exit_code);
  add_estimate(app, exit_code);
  add_plan(app, exit_code);
  add_seeu(app, exit_code);
  add_baseline(app, exit_code);
  add_bench(app, exit_code);
  add_slope(app, exit_code);
}

}  // namespace rsb::cli
