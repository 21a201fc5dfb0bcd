#include "rsbandit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rsbandit/errors.hpp"

namespace rsb {

std::vector<ObservationTriple> collect_triples(std::span<const ExplorationSegment> segments, int num_arms) {
  std::vector<ObservationTriple> triples;
  for (const auto& segment : segments) {
    if (segment.size() < 3) continue;
    for (std::size_t t = 1; t + 1 < segment.size(); ++t) {
      triples.push_back({encode_observation(segment[t - 1].arm, segment[t - 1].reward, num_arms).value,
                         encode_observation(segment[t].arm, segment[t].reward, num_arms).value,
                         encode_observation(segment[t + 1].arm, segment[t + 1].reward, num_arms).value});
    }
  }
  if (triples.empty()) throw Error(ErrorCode::InsufficientData, "no segment holds three consecutive observations");
  return triples;
}

namespace {

PseudoInverse checked_pinv(const Matrix& w, int states, const char* name) {
  PseudoInverse p = pseudo_inverse(w, states);
  if (p.numerical_rank < states)
    throw Error(ErrorCode::IllConditionedMoments,
                fmt::format("{} has numerical rank {} < {} hidden states", name, p.numerical_rank, states));
  return p;
}

void check_rank(const Matrix& w, int states, const char* name) { checked_pinv(w, states, name); }

}  // namespace

MomentStats estimate_moments(std::span<const ObservationTriple> triples, int num_arms, int states) {
  if (triples.empty()) throw Error(ErrorCode::InsufficientData, "need at least one triple");
  if (states < 1) throw Error(ErrorCode::InvalidArgument, "need at least one hidden state");
  const int s = 2 * num_arms;

  // Counts of (prev, cur, next), accumulated in input order.
  std::vector<double> counts(static_cast<std::size_t>(s) * s * s, 0.0);
  auto at = [s](int a, int b, int c) { return (static_cast<std::size_t>(a) * s + b) * s + c; };
  for (const auto& tr : triples) {
    if (tr.prev < 0 || tr.prev >= s || tr.cur < 0 || tr.cur >= s || tr.next < 0 || tr.next >= s)
      throw Error(ErrorCode::InvalidArgument, "triple holds an observation outside the alphabet");
    counts[at(tr.prev, tr.cur, tr.next)] += 1.0;
  }
  const double n = static_cast<double>(triples.size());

  MomentStats out;
  out.alphabet = s;
  out.n_triples = triples.size();
  out.w_prev_cur = Matrix::Zero(s, s);
  out.w_next_cur = Matrix::Zero(s, s);
  out.w_next_prev = Matrix::Zero(s, s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      for (int c = 0; c < s; ++c) {
        const double f = counts[at(a, b, c)] / n;
        if (f == 0.0) continue;
        out.w_prev_cur(a, b) += f;
        out.w_next_cur(c, b) += f;
        out.w_next_prev(c, a) += f;
      }
  out.w_cur_prev = out.w_prev_cur.transpose();

  const PseudoInverse inv_prev_cur = checked_pinv(out.w_prev_cur, states, "W(prev,cur)");
  const PseudoInverse inv_cur_prev = checked_pinv(out.w_cur_prev, states, "W(cur,prev)");
  check_rank(out.w_next_cur, states, "W(next,cur)");
  check_rank(out.w_next_prev, states, "W(next,prev)");

  // Column s of each map is the symmetrized view of basis observation e_s.
  const Matrix view_prev = out.w_next_cur * inv_prev_cur.matrix;
  const Matrix view_cur = out.w_next_prev * inv_cur_prev.matrix;

  out.m2 = view_prev * out.w_prev_cur * view_cur.transpose();
  out.m3 = Tensor3(s);
  Matrix slice(s, s);
  for (int c = 0; c < s; ++c) {
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) slice(a, b) = counts[at(a, b, c)] / n;
    const Matrix projected = view_prev * slice * view_cur.transpose();
    for (int x = 0; x < s; ++x)
      for (int y = 0; y < s; ++y) out.m3(x, y, c) = projected(x, y);
  }
  return out;
}

PopulationViews population_views(const HmmBanditModel& model) {
  const int m_count = model.states();
  const int arms = model.arms();
  const int s = 2 * arms;
  PopulationViews v;
  v.stationary = stationary_distribution(model.transition()).vector();

  v.a2 = Matrix::Zero(s, m_count);
  for (int m = 0; m < m_count; ++m)
    for (int i = 0; i < arms; ++i) {
      v.a2(2 * i + 1, m) = model.mean(m, i) / arms;
      v.a2(2 * i, m) = (1.0 - model.mean(m, i)) / arms;
    }
  // Reverse-time kernel R(m', m) = P(M_{t-1} = m' | M_t = m).
  Matrix reverse(m_count, m_count);
  for (int from = 0; from < m_count; ++from)
    for (int to = 0; to < m_count; ++to)
      reverse(from, to) = v.stationary(from) * model.transition(from, to) / v.stationary(to);
  v.a1 = v.a2 * reverse;
  v.a3 = v.a2 * model.transition().transpose();
  return v;
}

MomentStats population_moments(const HmmBanditModel& model) {
  const PopulationViews v = population_views(model);
  const Matrix d = v.stationary.asDiagonal();
  const int s = static_cast<int>(v.a2.rows());
  MomentStats out;
  out.alphabet = s;
  out.n_triples = 0;
  out.w_prev_cur = v.a1 * d * v.a2.transpose();
  out.w_next_cur = v.a3 * d * v.a2.transpose();
  out.w_cur_prev = v.a2 * d * v.a1.transpose();
  out.w_next_prev = v.a3 * d * v.a1.transpose();
  out.m2 = v.a3 * d * v.a3.transpose();
  out.m3 = Tensor3(s);
  for (int m = 0; m < model.states(); ++m) out.m3.subtract_rank_one(-v.stationary(m), v.a3.col(m));
  return out;
}

namespace {

struct PowerResult {
  Vector vector;
  double value = 0.0;
  double last_step = 0.0;
};

PowerResult power_iterate(const Tensor3& t, Vector theta, int iterations, double tolerance) {
  PowerResult r;
  r.last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iterations; ++it) {
    Vector next = t.contract_two(theta);
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    next /= norm;
    r.last_step = (next - theta).norm();
    theta = std::move(next);
    if (r.last_step < tolerance) break;
  }
  r.value = t.contract_three(theta);
  r.vector = std::move(theta);
  return r;
}

Vector random_unit(int dim, RngStream& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  const double norm = v.norm();
  if (norm == 0.0) v(0) = 1.0;
  return v / (norm == 0.0 ? 1.0 : norm);
}

}  // namespace

TensorDecomposition tensor_decompose(const Matrix& m2, const Tensor3& m3, int rank, RngStream& rng,
                                     const TensorPowerOptions& options) {
  const int s = static_cast<int>(m2.rows());
  if (m2.cols() != s || m3.dim() != s) throw Error(ErrorCode::InvalidArgument, "moment dimensions disagree");
  if (rank < 1 || rank > s) throw Error(ErrorCode::InvalidArgument, fmt::format("rank {} not in [1, {}]", rank, s));

  const Matrix sym = 0.5 * (m2 + m2.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::WhiteningFailure, "eigendecomposition of M2 failed");
  // Eigen sorts ascending; the top `rank` pairs are the last columns.
  Matrix u(s, rank);
  Vector lambda(rank);
  for (int k = 0; k < rank; ++k) {
    lambda(k) = eig.eigenvalues()(s - 1 - k);
    u.col(k) = eig.eigenvectors().col(s - 1 - k);
  }
  if (!(lambda(rank - 1) > options.whitening_floor))
    throw Error(ErrorCode::WhiteningFailure,
                fmt::format("M2 has fewer than {} eigenvalues above {}", rank, options.whitening_floor));

  const Matrix whiten = u * lambda.cwiseInverse().cwiseSqrt().asDiagonal();
  const Matrix unwhiten = u * lambda.cwiseSqrt().asDiagonal();
  Tensor3 t = m3.multilinear(whiten).symmetrized();

  TensorDecomposition out;
  out.columns = Matrix::Zero(s, rank);
  out.weights = Vector::Zero(rank);
  out.whitening_condition = lambda(0) / lambda(rank - 1);

  for (int comp = 0; comp < rank; ++comp) {
    PowerResult best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.restarts; ++r) {
      PowerResult cand = power_iterate(t, random_unit(rank, rng), options.iterations, options.tolerance);
      if (cand.value > best.value) best = std::move(cand);
    }
    PowerResult refined = power_iterate(t, best.vector, options.iterations, options.tolerance);
    if (!(refined.last_step < options.convergence_check))
      throw Error(ErrorCode::NonConvergence,
                  fmt::format("component {} still moving by {:.3g} after {} restarts", comp, refined.last_step,
                              options.restarts));
    if (!(refined.value > 0.0))
      throw Error(ErrorCode::NonConvergence, fmt::format("component {} has non-positive eigenvalue", comp));
    t.subtract_rank_one(refined.value, refined.vector);
    out.columns.col(comp) = refined.value * (unwhiten * refined.vector);
    out.weights(comp) = 1.0 / (refined.value * refined.value);
  }

  Tensor3 residual = m3;
  for (int comp = 0; comp < rank; ++comp) residual.subtract_rank_one(out.weights(comp), out.columns.col(comp));
  out.residual = residual.frobenius_norm();
  return out;
}

SpectralEstimate recover_parameters(const Matrix& b_hat, const MomentStats& moments, int states, int num_arms,
                                    const EstimateBounds& bounds) {
  const int s = 2 * num_arms;
  if (b_hat.rows() != s || b_hat.cols() != states)
    throw Error(ErrorCode::InvalidArgument, "component matrix must be 2I x M");
  if (bounds.mu_floor < 0.0 || bounds.mu_floor >= 0.5 || bounds.p_floor < 0.0 || bounds.p_floor * states > 1.0)
    throw Error(ErrorCode::InvalidArgument, "estimate floors out of range");

  // E[y_t | M_t] = W(cur,prev) W(next,prev)^+ E[y_{t+1} | M_t].
  const PseudoInverse inv = checked_pinv(moments.w_next_prev, states, "W(next,prev)");
  SpectralEstimate est;
  est.b_hat = b_hat;
  est.a_hat = moments.w_cur_prev * inv.matrix * b_hat;

  est.mu_hat = Matrix(states, num_arms);
  for (int m = 0; m < states; ++m)
    for (int i = 0; i < num_arms; ++i) {
      const double zero = est.a_hat(2 * i, m);
      const double one = est.a_hat(2 * i + 1, m);
      const double mass = zero + one;
      if (!(mass >= 1e-8))
        throw Error(ErrorCode::DegenerateColumn,
                    fmt::format("state {} arm {} carries observation mass {:.3g}", m, i, mass));
      est.mu_hat(m, i) = std::clamp(one / mass, bounds.mu_floor, 1.0 - bounds.mu_floor);
    }

  const PseudoInverse a_inv = pseudo_inverse(est.a_hat, states);
  if (a_inv.used_rank < states)
    throw Error(ErrorCode::DegenerateColumn, "recovered observation matrix is rank deficient");
  const Matrix p_raw = (a_inv.matrix * b_hat).transpose();
  est.p_hat = Matrix(states, states);
  for (int m = 0; m < states; ++m) est.p_hat.row(m) = project_to_simplex(p_raw.row(m).transpose(), bounds.p_floor).transpose();
  return est;
}

double confidence_factor(int alphabet, double delta, std::size_t samples) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "confidence radius needs n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  const double s = alphabet;
  return std::sqrt(std::log(6.0 * (s * s + s) / delta) / static_cast<double>(samples));
}

ConfidenceRegion confidence_region(const SpectralEstimate& estimate, std::size_t samples, double delta, double c1,
                                   double c2) {
  if (c1 < 0.0 || c2 < 0.0) throw Error(ErrorCode::InvalidArgument, "confidence constants must be nonnegative");
  const double factor = confidence_factor(2 * static_cast<int>(estimate.mu_hat.cols()), delta, samples);
  ConfidenceRegion region;
  region.mu_center = estimate.mu_hat;
  region.p_center = estimate.p_hat;
  region.radius_mu_row = c1 * factor;
  region.radius_p = c2 * factor;
  region.delta = delta;
  region.c1 = c1;
  region.c2 = c2;
  region.samples = samples;
  return region;
}

std::vector<int> align_permutation(const Matrix& mu_hat, const Matrix& mu_ref) {
  if (mu_hat.rows() != mu_ref.rows() || mu_hat.cols() != mu_ref.cols())
    throw Error(ErrorCode::InvalidArgument, "matrices to align must share a shape");
  const int m_count = static_cast<int>(mu_ref.rows());
  if (m_count > 8) throw Error(ErrorCode::InvalidArgument, "exhaustive alignment supports at most 8 states");
  std::vector<int> perm(static_cast<std::size_t>(m_count));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int m = 0; m < m_count; ++m) cost += (mu_hat.row(perm[static_cast<std::size_t>(m)]) - mu_ref.row(m)).norm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Matrix permute_rows(const Matrix& mu, std::span<const int> perm) {
  Matrix out(mu.rows(), mu.cols());
  for (Eigen::Index m = 0; m < mu.rows(); ++m) out.row(m) = mu.row(perm[static_cast<std::size_t>(m)]);
  return out;
}

Matrix permute_states(const Matrix& p, std::span<const int> perm) {
  Matrix out(p.rows(), p.cols());
  for (Eigen::Index a = 0; a < p.rows(); ++a)
    for (Eigen::Index b = 0; b < p.cols(); ++b)
      out(a, b) = p(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  return out;
}

SpectralResult spectral_estimate(std::span<const ExplorationSegment> segments, int states, int num_arms, RngStream& rng,
                                 const SpectralOptions& options) {
  const auto triples = collect_triples(segments, num_arms);
  const MomentStats moments = estimate_moments(triples, num_arms, states);
  const TensorDecomposition dec = tensor_decompose(moments.m2, moments.m3, states, rng, options.power);
  SpectralResult result;
  result.estimate = recover_parameters(dec.columns, moments, states, num_arms, options.bounds);
  result.estimate.residual = dec.residual;
  result.estimate.whitening_condition = dec.whitening_condition;
  result.n_triples = triples.size();
  return result;
}

}  // namespace rsb
