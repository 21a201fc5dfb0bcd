#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsbandit/baselines.hpp"
#include "rsbandit/model.hpp"
#include "rsbandit/seeu.hpp"

namespace rsb {

/// One algorithm entry of an experiment. `kind` is "seeu" or a baseline kind
/// name; for sliding-window UCB a list of window rules ("sqrtT", "T23",
/// "4sqrtT" or a literal integer) expands into one variant per rule plus a
/// best-of row under `name`.
struct AlgorithmSpec {
  std::string name;
  std::string kind;
  SeeuConfig seeu;
  BaselineConfig baseline;
  std::vector<std::string> windows;
};

struct ExperimentConfig {
  std::filesystem::path model_path;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::size_t> horizons;
  int runs = 20;
  std::uint64_t master_seed = 1;
  int workers = 0;  ///< 0: one per hardware thread
  int rho_grid = 200;
};

/// Parses the JSON experiment description; a relative model path is resolved
/// against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& config);

/// Window length for a rule at horizon T.
std::size_t window_for_rule(std::string_view rule, std::size_t horizon);

/// hash(master, algorithm, T, run): independent of the rest of the sweep.
std::uint64_t run_seed(std::uint64_t master, std::string_view algorithm, std::size_t horizon, int run);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;
  std::vector<std::string> warnings;
};

/// Least squares of log y on log x. Non-positive y values are dropped with a
/// warning; throws InsufficientData with fewer than 3 usable points.
SlopeFit loglog_slope(std::span<const std::pair<double, double>> points);

struct RawResult {
  std::string algorithm;
  std::size_t horizon = 0;
  int run = 0;
  std::uint64_t seed = 0;
  double final_regret = 0.0;
};

struct SummaryRow {
  std::string algorithm;
  std::size_t horizon = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t n = 0;
  std::size_t failed = 0;
  std::string source;  ///< best window variant for best-of rows
};

struct SlopeRow {
  std::string algorithm;
  SlopeFit fit;
};

struct ExperimentResult {
  double rho_star = 0.0;
  double rho_half_grid = 0.0;  ///< rho at half the resolution
  std::vector<RawResult> raw;
  std::vector<SummaryRow> summary;
  std::vector<SlopeRow> slopes;
  std::vector<std::string> warnings;
  std::vector<std::string> violations;

  const SummaryRow* find(std::string_view algorithm, std::size_t horizon) const;
  double discretization_estimate() const { return rho_star > rho_half_grid ? rho_star - rho_half_grid : rho_half_grid - rho_star; }
};

/// Mean and standard error of the mean.
std::pair<double, double> mean_and_stderr(std::span<const double> values);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Writes raw.csv, summary.csv, slopes.csv and meta.txt into `dir`.
void write_experiment(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir);

std::string summary_csv(const ExperimentResult& result);
std::string raw_csv(const ExperimentResult& result);
std::string slopes_csv(const ExperimentResult& result);

}  // namespace rsb
