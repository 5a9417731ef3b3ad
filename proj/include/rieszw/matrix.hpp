#pragma once

#include "rieszw/core.hpp"

#include <vector>

namespace rieszw {

/// Spectral norm of the top-left n x n block.
double operator_norm(const Mat& a, int n);

/// Ratio of largest to smallest singular value of the top-left n x n block
/// (+inf when singular).
double condition_number(const Mat& a, int n);

/// The matrices A_1..A_m of a generalized Riesz kernel with their inverses
/// and the norm bound M = max_j ||A_j||. Immutable after construction.
class MatrixFamily {
 public:
  static constexpr double kDefaultConditionCap = 1e8;

  /// Throws InvalidMatrix naming the offending index and its condition
  /// number when a matrix (or, with pairwise_invertible, a difference
  /// A_i - A_j) exceeds the condition-number cap.
  MatrixFamily(int n, std::vector<Mat> matrices, bool pairwise_invertible = false,
               double condition_cap = kDefaultConditionCap);

  static MatrixFamily identity(int n, int m = 1);
  /// Row-major entry lists, one per matrix.
  static MatrixFamily from_entries(int n, const std::vector<std::vector<double>>& entries,
                                   bool pairwise_invertible = false,
                                   double condition_cap = kDefaultConditionCap);

  int dim() const { return n_; }
  int size() const { return static_cast<int>(matrices_.size()); }
  const Mat& matrix(int j) const { return matrices_[static_cast<std::size_t>(j)]; }
  const Mat& inverse(int j) const { return inverses_[static_cast<std::size_t>(j)]; }
  Mat difference(int i, int j) const { return matrix(i) - matrix(j); }
  double norm(int j) const { return norms_[static_cast<std::size_t>(j)]; }
  double norm_bound() const { return norm_bound_; }
  double condition_cap() const { return condition_cap_; }
  /// Largest condition number among the pairwise differences (+inf when some
  /// difference is singular; 1 for a single matrix).
  double worst_difference_condition() const;
  bool pairwise_invertible() const { return worst_difference_condition() <= condition_cap_; }
  bool is_identity_family() const;
  std::vector<std::vector<double>> entries() const;

 private:
  int n_;
  std::vector<Mat> matrices_;
  std::vector<Mat> inverses_;
  std::vector<double> norms_;
  double norm_bound_ = 0.0;
  double condition_cap_;
};

}  // namespace rieszw
