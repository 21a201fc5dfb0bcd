#include "rsbandit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <fmt/format.h>
#include <json.hpp>

#include "rsbandit/errors.hpp"
#include "rsbandit/model_io.hpp"
#include "rsbandit/planner.hpp"

namespace rsb {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

AlgorithmSpec parse_algorithm(const json& j) {
  AlgorithmSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  spec.name = get_or<std::string>(j, "name", spec.kind);
  if (spec.kind == "seeu") {
    SeeuConfig& c = spec.seeu;
    c.tau1 = get_or(j, "tau1", c.tau1);
    c.tau2 = get_or(j, "tau2", c.tau2);
    c.delta = get_or(j, "delta", c.delta);
    c.c1 = get_or(j, "c1", c.c1);
    c.c2 = get_or(j, "c2", c.c2);
    c.grid_resolution = get_or(j, "grid", c.grid_resolution);
    c.candidates = get_or(j, "candidates", c.candidates);
    c.planner.tolerance = get_or(j, "tol", c.planner.tolerance);
    c.planner.max_iterations = get_or(j, "max_iter", c.planner.max_iterations);
    validate_config(c);
    return spec;
  }
  BaselineConfig& b = spec.baseline;
  b.kind = parse_baseline_kind(spec.kind);
  b.epsilon = get_or(j, "epsilon", b.epsilon);
  b.window = get_or<std::size_t>(j, "window", b.window);
  b.ucb_xi = get_or(j, "xi", b.ucb_xi);
  b.ucb_bound = get_or(j, "B", b.ucb_bound);
  b.gamma = get_or(j, "gamma", b.gamma);
  b.alpha = get_or(j, "alpha", b.alpha);
  b.hardness = get_or(j, "L", b.hardness);
  validate_config(b);
  if (j.contains("windows")) {
    if (b.kind != BaselineKind::SlidingWindowUcb) {
      throw Error(ErrorCode::InvalidArgument, "'windows' only applies to sw_ucb");
    }
    spec.windows = j.at("windows").get<std::vector<std::string>>();
    for (const auto& rule : spec.windows) (void)window_for_rule(rule, 100);
  }
  return spec;
}

/// One concrete algorithm after window-rule expansion.
struct Variant {
  std::string name;
  const AlgorithmSpec* spec = nullptr;
  std::string window_rule;
};

std::vector<Variant> expand(const ExperimentConfig& config) {
  std::vector<Variant> out;
  for (const auto& a : config.algorithms) {
    if (a.windows.empty()) {
      out.push_back({a.name, &a, {}});
      continue;
    }
    for (const auto& rule : a.windows) out.push_back({a.name + "_" + rule, &a, rule});
  }
  return out;
}

double run_one(const HmmBanditModel& truth, const Variant& v, std::size_t horizon, std::uint64_t seed,
               double rho_star, std::vector<std::string>& violations) {
  RunLog log;
  if (v.spec->kind == "seeu") {
    const EpisodeSchedule schedule = episode_schedule(v.spec->seeu.tau1, v.spec->seeu.tau2, horizon);
    if (!schedule.within_count_bounds()) {
      violations.push_back(fmt::format("{} T={}: episode count {} outside [{:.3f}, {:.3f}]", v.name, horizon,
                                       schedule.count(), schedule.lower_count_bound(), schedule.upper_count_bound()));
    }
    log = run_seeu(truth, v.spec->seeu, horizon, seed);
  } else {
    BaselineConfig b = v.spec->baseline;
    if (!v.window_rule.empty()) b.window = window_for_rule(v.window_rule, horizon);
    log = run_baseline(truth, b, horizon, seed);
  }
  if (log.horizon() != horizon) {
    violations.push_back(fmt::format("{} T={}: log has {} steps", v.name, horizon, log.horizon()));
  }
  return static_cast<double>(horizon) * rho_star - log.total_reward();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("experiment config: {}", e.what()));
  }
  ExperimentConfig config;
  try {
    std::filesystem::path model = j.at("model").get<std::string>();
    config.model_path = model.is_relative() && !base_dir.empty() ? base_dir / model : model;
    config.horizons = j.at("T").get<std::vector<std::size_t>>();
    config.runs = get_or(j, "runs", config.runs);
    config.master_seed = get_or<std::uint64_t>(j, "master_seed", config.master_seed);
    config.workers = get_or(j, "workers", config.workers);
    config.rho_grid = get_or(j, "rho_grid", config.rho_grid);
    for (const auto& a : j.at("algorithms")) config.algorithms.push_back(parse_algorithm(a));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("experiment config: {}", e.what()));
  }
  validate_config(config);
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_text_file(path), path.parent_path());
}

void validate_config(const ExperimentConfig& config) {
  if (config.horizons.empty()) throw Error(ErrorCode::InvalidArgument, "T grid is empty");
  for (std::size_t j = 0; j < config.horizons.size(); ++j) {
    if (config.horizons[j] < 1 || (j > 0 && config.horizons[j] <= config.horizons[j - 1])) {
      throw Error(ErrorCode::InvalidArgument, "T grid must be positive and strictly increasing");
    }
  }
  if (config.runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  if (config.workers < 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 0");
  if (config.rho_grid < 2) throw Error(ErrorCode::InvalidArgument, "rho_grid must be >= 2");
  if (config.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "no algorithms configured");
  std::vector<std::string> names;
  for (const auto& v : config.algorithms) {
    names.push_back(v.name);
    for (const auto& rule : v.windows) names.push_back(v.name + "_" + rule);
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw Error(ErrorCode::InvalidArgument, "algorithm names must be unique");
  }
}

std::size_t window_for_rule(std::string_view rule, std::size_t horizon) {
  const double t = static_cast<double>(horizon);
  double w = 0.0;
  if (rule == "sqrtT") {
    w = std::sqrt(t);
  } else if (rule == "T23") {
    w = std::pow(t, 2.0 / 3.0);
  } else if (rule == "4sqrtT") {
    w = 4.0 * std::sqrt(t);
  } else {
    std::size_t literal = 0;
    const auto* end = rule.data() + rule.size();
    const auto [ptr, ec] = std::from_chars(rule.data(), end, literal);
    if (ec != std::errc() || ptr != end || literal == 0) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("unknown window rule '{}'", rule));
    }
    return literal;
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(w)));
}

std::uint64_t run_seed(std::uint64_t master, std::string_view algorithm, std::size_t horizon, int run) {
  const std::string name(algorithm);
  return mix_seed({master, hash_name(name.c_str()), static_cast<std::uint64_t>(horizon), static_cast<std::uint64_t>(run)});
}

SlopeFit loglog_slope(std::span<const std::pair<double, double>> points) {
  SlopeFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(y)) {
      fit.warnings.push_back(fmt::format("{}: point (T={}, regret={}) dropped, log undefined",
                                         to_string(ErrorCode::NonPositiveRegret), x, y));
      continue;
    }
    xs.push_back(std::log(x));
    ys.push_back(std::log(y));
  }
  fit.points = xs.size();
  if (xs.size() < 3) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("log-log slope needs at least 3 positive points, have {}", xs.size()));
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    mx += xs[j];
    my += ys[j];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sxx += (xs[j] - mx) * (xs[j] - mx);
    sxy += (xs[j] - mx) * (ys[j] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-log slope needs distinct T values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double e = ys[j] - fit.intercept - fit.slope * xs[j];
    ssr += e * e;
  }
  fit.stderr_slope = xs.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return fit;
}

std::pair<double, double> mean_and_stderr(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

const SummaryRow* ExperimentResult::find(std::string_view algorithm, std::size_t horizon) const {
  for (const auto& row : summary) {
    if (row.algorithm == algorithm && row.horizon == horizon) return &row;
  }
  return nullptr;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  validate_config(config);
  const HmmBanditModel truth = load_model(config.model_path).model;
  ExperimentResult result;
  {
    PlannerOptions opts;
    const auto fine = solve_average_reward(truth, build_simplex_grid(truth.states(), config.rho_grid), opts);
    const auto coarse = solve_average_reward(truth, build_simplex_grid(truth.states(), config.rho_grid / 2), opts);
    if (!fine.converged || !coarse.converged) {
      result.violations.push_back("value iteration for the true model did not converge");
    }
    result.rho_star = fine.rho;
    result.rho_half_grid = coarse.rho;
  }

  const std::vector<Variant> variants = expand(config);
  struct Task {
    std::size_t variant;
    std::size_t horizon;
    int run;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t h : config.horizons) {
      for (int r = 0; r < config.runs; ++r) tasks.push_back({v, h, r});
    }
  }
  // Longest runs first keeps the pool busy; results are stored by index.
  std::vector<std::size_t> order(tasks.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tasks[a].horizon > tasks[b].horizon; });

  struct Outcome {
    double regret = 0.0;
    bool ok = false;
    std::string error;
    std::vector<std::string> violations;
  };
  std::vector<Outcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= order.size()) return;
      const std::size_t j = order[slot];
      const Task& task = tasks[j];
      const Variant& v = variants[task.variant];
      Outcome& out = outcomes[j];
      try {
        out.regret = run_one(truth, v, task.horizon, run_seed(config.master_seed, v.name, task.horizon, task.run),
                             result.rho_star, out.violations);
        out.ok = std::isfinite(out.regret);
        if (!out.ok) out.error = "non-finite regret";
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, tasks.size());
      }
    }
  };
  unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Gather in task order: variant, T, run.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> finals;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> failures;
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    const Task& task = tasks[j];
    const Variant& v = variants[task.variant];
    const Outcome& out = outcomes[j];
    for (const auto& msg : out.violations) result.violations.push_back(msg);
    if (!out.ok) {
      ++failures[{task.variant, task.horizon}];
      result.warnings.push_back(fmt::format("{} T={} run {} failed: {}", v.name, task.horizon, task.run, out.error));
      continue;
    }
    result.raw.push_back({v.name, task.horizon, task.run, run_seed(config.master_seed, v.name, task.horizon, task.run),
                          out.regret});
    finals[{task.variant, task.horizon}].push_back(out.regret);
  }

  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t h : config.horizons) {
      const auto& values = finals[{v, h}];
      const auto [mean, se] = mean_and_stderr(values);
      result.summary.push_back({variants[v].name, h, mean, se, values.size(), failures[{v, h}], {}});
    }
  }

  // Best-of rows for window sweeps: copy the raw rows of the best variant.
  for (const auto& a : config.algorithms) {
    if (a.windows.empty()) continue;
    for (std::size_t h : config.horizons) {
      const SummaryRow* best = nullptr;
      for (const auto& rule : a.windows) {
        const SummaryRow* row = result.find(a.name + "_" + rule, h);
        if (row != nullptr && row->n > 0 && (best == nullptr || row->mean < best->mean)) best = row;
      }
      if (best == nullptr) continue;
      SummaryRow copy = *best;
      copy.source = copy.algorithm;
      copy.algorithm = a.name;
      const std::string source = copy.source;
      std::vector<RawResult> extra;
      for (const auto& r : result.raw) {
        if (r.algorithm == source && r.horizon == h) {
          RawResult c = r;
          c.algorithm = a.name;
          extra.push_back(c);
        }
      }
      result.raw.insert(result.raw.end(), extra.begin(), extra.end());
      result.summary.push_back(std::move(copy));
    }
  }

  // Independent recomputation of every summary mean from the raw rows.
  for (const auto& row : result.summary) {
    std::vector<double> values;
    for (const auto& r : result.raw) {
      if (r.algorithm == row.algorithm && r.horizon == row.horizon) values.push_back(r.final_regret);
    }
    const auto [mean, se] = mean_and_stderr(values);
    if (values.size() != row.n || std::abs(mean - row.mean) > 1e-9 * std::max(1.0, std::abs(mean))) {
      result.violations.push_back(fmt::format("summary row {} T={} disagrees with raw rows", row.algorithm, row.horizon));
    }
  }

  if (config.horizons.size() >= 3) {
    std::vector<std::string> names;
    for (const auto& row : result.summary) {
      if (std::find(names.begin(), names.end(), row.algorithm) == names.end()) names.push_back(row.algorithm);
    }
    for (const auto& name : names) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& row : result.summary) {
        if (row.algorithm == name && row.n > 0) pts.emplace_back(static_cast<double>(row.horizon), row.mean);
      }
      try {
        SlopeRow s{name, loglog_slope(pts)};
        for (const auto& w : s.fit.warnings) result.warnings.push_back(fmt::format("{}: {}", name, w));
        result.slopes.push_back(std::move(s));
      } catch (const Error& e) {
        result.warnings.push_back(fmt::format("{}: slope not fitted: {}", name, e.what()));
      }
    }
  }
  return result;
}

std::string raw_csv(const ExperimentResult& result) {
  std::string out = "algo,T,run,seed,final_regret\n";
  for (const auto& r : result.raw) {
    out += fmt::format("{},{},{},{},{}\n", r.algorithm, r.horizon, r.run, r.seed, format_double(r.final_regret));
  }
  return out;
}

std::string summary_csv(const ExperimentResult& result) {
  std::string out = "algo,T,mean,stderr,n,failed,source\n";
  for (const auto& r : result.summary) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.algorithm, r.horizon, format_double(r.mean),
                       format_double(r.stderr_mean), r.n, r.failed, r.source);
  }
  return out;
}

std::string slopes_csv(const ExperimentResult& result) {
  std::string out = "algo,slope,stderr,intercept,points\n";
  for (const auto& s : result.slopes) {
    out += fmt::format("{},{},{},{},{}\n", s.algorithm, format_double(s.fit.slope), format_double(s.fit.stderr_slope),
                       format_double(s.fit.intercept), s.fit.points);
  }
  return out;
}

namespace {

std::string meta_text(const ExperimentConfig& config, const ExperimentResult& result) {
  std::ostringstream out;
  out << "rsbandit " << RSBANDIT_VERSION << '\n';
  out << fmt::format("eigen {}.{}.{}\n", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
#if defined(__clang__)
  out << "compiler clang " << __clang_version__ << '\n';
#elif defined(__GNUC__)
  out << "compiler gcc " << __VERSION__ << '\n';
#endif
  out << "model " << config.model_path.generic_string() << '\n';
  out << "master_seed " << config.master_seed << '\n';
  out << "runs " << config.runs << '\n';
  out << "T";
  for (auto h : config.horizons) out << ' ' << h;
  out << '\n';
  out << "rho_grid " << config.rho_grid << '\n';
  out << "rho_star " << format_double(result.rho_star) << '\n';
  out << "rho_star_half_grid " << format_double(result.rho_half_grid) << '\n';
  out << "rho_star_discretization_estimate " << format_double(result.discretization_estimate()) << '\n';
  for (const auto& a : config.algorithms) {
    out << "algorithm " << a.name << " kind=" << a.kind;
    if (a.kind == "seeu") {
      const auto& c = a.seeu;
      out << fmt::format(" tau1={} tau2={} delta={} c1={} c2={} grid={} candidates={} tol={} max_iter={}", c.tau1,
                         format_double(c.tau2), format_double(c.delta), format_double(c.c1), format_double(c.c2),
                         c.grid_resolution, c.candidates,
                         format_double(c.planner.tolerance), c.planner.max_iterations);
    } else {
      const auto& b = a.baseline;
      out << fmt::format(" epsilon={} window={} xi={} B={} gamma={} alpha={} L={}", format_double(b.epsilon), b.window,
                         format_double(b.ucb_xi), format_double(b.ucb_bound),
                         b.gamma > 0 ? format_double(b.gamma) : std::string("auto"),
                         b.alpha >= 0 ? format_double(b.alpha) : std::string("1/T"),
                         b.hardness >= 0 ? format_double(b.hardness) : std::string("T"));
      if (!a.windows.empty()) {
        out << " windows=";
        for (std::size_t j = 0; j < a.windows.size(); ++j) out << (j ? "," : "") << a.windows[j];
      }
    }
    out << '\n';
  }
  for (const auto& w : result.warnings) out << "warning " << w << '\n';
  for (const auto& v : result.violations) out << "violation " << v << '\n';
  return out.str();
}

}  // namespace

void write_experiment(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir) {
  write_text_file(dir / "raw.csv", raw_csv(result));
  write_text_file(dir / "summary.csv", summary_csv(result));
  write_text_file(dir / "slopes.csv", slopes_csv(result));
  write_text_file(dir / "meta.txt", meta_text(config, result));
}

}  // namespace rsb
