#include "rsbandit/run_log.hpp"

#include <ostream>

#include <fmt/format.h>

#include "rsbandit/model_io.hpp"

namespace rsb {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Explore: return "explore";
    case Phase::Exploit: return "exploit";
    case Phase::Play: return "play";
  }
  return "unknown";
}

double RunLog::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

void RunLog::write_steps_csv(std::ostream& out) const {
  out << "t,episode,phase,arm,reward";
  for (int m = 0; m < states; ++m) out << ",b" << (m + 1);
  out << '\n';
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto& s = steps[j];
    out << fmt::format("{},{},{},{},{}", s.t, s.episode, to_string(s.phase), s.arm + 1, s.reward);
    if (states > 0) {
      for (double v : belief(j)) out << ',' << format_double(v);
    }
    out << '\n';
  }
}

namespace {

std::string flatten(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!out.empty()) out += ' ';
      out += format_double(m(r, c));
    }
  }
  return out;
}

}  // namespace

void RunLog::write_episodes_csv(std::ostream& out) const {
  out << "k,explore_first,explore_last,exploit_first,exploit_last,estimator_samples,n_triples,delta_k,"
         "estimated,fallback,mu_hat,p_hat,radius_mu,radius_p,mu_opt,p_opt,rho_k,planner_residual,"
         "planner_iterations,candidates,skipped,note\n";
  for (const auto& e : episodes) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n", e.k, e.explore_first,
                       e.explore_last, e.exploit_first, e.exploit_last, e.estimator_samples, e.n_triples,
                       format_double(e.delta_k), e.estimated ? 1 : 0, e.fallback ? 1 : 0, flatten(e.mu_hat),
                       flatten(e.p_hat), format_double(e.radius_mu), format_double(e.radius_p), flatten(e.mu_opt),
                       flatten(e.p_opt), format_double(e.rho_k), format_double(e.planner_residual),
                       e.planner_iterations, e.candidates_evaluated, e.candidates_skipped, e.note);
  }
}

std::vector<double> regret(const RunLog& log, double rho_star) {
  std::vector<double> series(log.steps.size());
  double reward = 0.0;
  for (std::size_t j = 0; j < log.steps.size(); ++j) {
    reward += log.steps[j].reward;
    series[j] = static_cast<double>(j + 1) * rho_star - reward;
  }
  return series;
}

}  // namespace rsb
