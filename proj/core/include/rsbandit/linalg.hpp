#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rsb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense cubic tensor T(i, j, k) with i, j, k in [0, dim).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

  int dim() const noexcept { return dim_; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  std::span<const double> data() const noexcept { return data_; }

  /// T(W, W, W): contract every mode with the columns of `w` (dim x r).
  Tensor3 multilinear(const Matrix& w) const;
  /// T(I, u, u) as a vector.
  Vector contract_two(const Vector& u) const;
  /// T(u, u, u).
  double contract_three(const Vector& u) const;
  /// Average over the six index permutations.
  Tensor3 symmetrized() const;
  double frobenius_norm() const;
  /// this -= weight * (v ⊗ v ⊗ v)
  void subtract_rank_one(double weight, const Vector& v);

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
  }

  int dim_ = 0;
  std::vector<double> data_;
};

/// Result of a rank-truncated SVD pseudo-inverse.
struct PseudoInverse {
  Matrix matrix;
  /// Number of singular values above the relative tolerance, before any cap.
  int numerical_rank = 0;
  /// Number of singular values actually inverted.
  int used_rank = 0;
};

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// max(rows, cols) * sigma_max * rel_tol are discarded, and at most
/// `max_rank` of the largest ones are inverted (max_rank < 0: no cap).
PseudoInverse pseudo_inverse(const Matrix& a, int max_rank = -1, double rel_tol = 1e-10);

/// Euclidean projection of `x` onto {y : y_i >= floor, sum y = 1}.
/// Requires floor * x.size() <= 1.
Vector project_to_simplex(const Vector& x, double floor = 0.0);

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// Smallest singular value (0 for empty).
double min_singular_value(const Matrix& a);

}  // namespace rsb
