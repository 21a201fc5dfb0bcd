#include "rsbandit/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rsbandit/errors.hpp"

namespace rsb {

Tensor3 Tensor3::multilinear(const Matrix& w) const {
  const int r = static_cast<int>(w.cols());
  // Contract one mode at a time: O(dim^3 r + dim^2 r^2 + dim r^3).
  std::vector<double> a(static_cast<std::size_t>(dim_) * dim_ * r, 0.0);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        const double t = (*this)(i, j, k);
        if (t == 0.0) continue;
        for (int c = 0; c < r; ++c) a[(static_cast<std::size_t>(i) * dim_ + j) * r + c] += t * w(k, c);
      }
  std::vector<double> b(static_cast<std::size_t>(dim_) * r * r, 0.0);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int bb = 0; bb < r; ++bb) {
        const double wj = w(j, bb);
        for (int c = 0; c < r; ++c)
          b[(static_cast<std::size_t>(i) * r + bb) * r + c] += wj * a[(static_cast<std::size_t>(i) * dim_ + j) * r + c];
      }
  Tensor3 out(r);
  for (int i = 0; i < dim_; ++i)
    for (int aa = 0; aa < r; ++aa) {
      const double wi = w(i, aa);
      for (int bb = 0; bb < r; ++bb)
        for (int c = 0; c < r; ++c) out(aa, bb, c) += wi * b[(static_cast<std::size_t>(i) * r + bb) * r + c];
    }
  return out;
}

Vector Tensor3::contract_two(const Vector& u) const {
  Vector out = Vector::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) s += (*this)(i, j, k) * u(j) * u(k);
    out(i) = s;
  }
  return out;
}

double Tensor3::contract_three(const Vector& u) const { return u.dot(contract_two(u)); }

Tensor3 Tensor3::symmetrized() const {
  Tensor3 out(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        const double s = (*this)(i, j, k) + (*this)(i, k, j) + (*this)(j, i, k) + (*this)(j, k, i) +
                         (*this)(k, i, j) + (*this)(k, j, i);
        out(i, j, k) = s / 6.0;
      }
  return out;
}

double Tensor3::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

void Tensor3::subtract_rank_one(double weight, const Vector& v) {
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) (*this)(i, j, k) -= weight * v(i) * v(j) * v(k);
}

PseudoInverse pseudo_inverse(const Matrix& a, int max_rank, double rel_tol) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  PseudoInverse out;
  out.matrix = Matrix::Zero(a.cols(), a.rows());
  if (sv.size() == 0) return out;
  const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) * sv(0) * rel_tol;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) ++out.numerical_rank;
  out.used_rank = max_rank < 0 ? out.numerical_rank : std::min(out.numerical_rank, max_rank);
  for (int i = 0; i < out.used_rank; ++i)
    out.matrix += svd.matrixV().col(i) * (1.0 / sv(i)) * svd.matrixU().col(i).transpose();
  return out;
}

Vector project_to_simplex(const Vector& x, double floor) {
  const auto n = x.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "cannot project an empty vector");
  const double mass = 1.0 - floor * static_cast<double>(n);
  if (mass < 0.0) throw Error(ErrorCode::InvalidArgument, "simplex floor too large for dimension");
  // Project y = x - floor onto {y >= 0, sum y = mass} (sort-based threshold).
  std::vector<double> sorted(x.data(), x.data() + n);
  for (double& v : sorted) v -= floor;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - mass) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) theta = candidate;
  }
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(x(i) - floor - theta, 0.0) + floor;
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double min_singular_value(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  return sv(sv.size() - 1);
}

}  // namespace rsb
