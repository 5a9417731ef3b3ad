#include "rieszw/matrix.hpp"

#include <limits>
#include <sstream>

namespace rieszw {

namespace {

Eigen::VectorXd singular_values(const Mat& a, int n) {
  const Eigen::MatrixXd block = a.topLeftCorner(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
  return svd.singularValues();
}

Mat invert(const Mat& a, int n) {
  Mat inv = Mat::Zero();
  if (n == 1) {
    inv(0, 0) = 1.0 / a(0, 0);
  } else {
    inv = a.inverse();
  }
  return inv;
}

}  // namespace

double operator_norm(const Mat& a, int n) {
  check_dim(n);
  if (!a.topLeftCorner(n, n).allFinite()) throw InvalidArgument("matrix has non-finite entries");
  return singular_values(a, n)(0);
}

double condition_number(const Mat& a, int n) {
  check_dim(n);
  const auto sv = singular_values(a, n);
  const double smin = sv(n - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

MatrixFamily::MatrixFamily(int n, std::vector<Mat> matrices, bool pairwise_invertible,
                           double condition_cap)
    : n_(n), matrices_(std::move(matrices)), condition_cap_(condition_cap) {
  check_dim(n);
  if (matrices_.empty()) throw InvalidMatrix("matrix family must contain at least one matrix");
  for (std::size_t j = 0; j < matrices_.size(); ++j) {
    Mat& a = matrices_[j];
    if (n == 1) {
      const double v = a(0, 0);
      a = Mat::Zero();
      a(0, 0) = v;
    }
    const double cond = condition_number(a, n);
    if (!(cond <= condition_cap_)) {
      std::ostringstream os;
      os << "matrix " << j << " is not safely invertible (condition number " << cond << ")";
      throw InvalidMatrix(os.str());
    }
    inverses_.push_back(invert(a, n));
    norms_.push_back(operator_norm(a, n));
    norm_bound_ = std::max(norm_bound_, norms_.back());
  }
  if (pairwise_invertible) {
    for (int i = 0; i < size(); ++i) {
      for (int j = i + 1; j < size(); ++j) {
        const double cond = condition_number(difference(i, j), n);
        if (!(cond <= condition_cap_)) {
          std::ostringstream os;
          os << "difference of matrices " << i << " and " << j
             << " is not safely invertible (condition number " << cond << ")";
          throw InvalidMatrix(os.str());
        }
      }
    }
  }
}

MatrixFamily MatrixFamily::identity(int n, int m) {
  check_dim(n);
  Mat id = Mat::Zero();
  id.topLeftCorner(n, n).setIdentity();
  return MatrixFamily(n, std::vector<Mat>(static_cast<std::size_t>(m), id));
}

MatrixFamily MatrixFamily::from_entries(int n, const std::vector<std::vector<double>>& entries,
                                        bool pairwise_invertible, double condition_cap) {
  check_dim(n);
  std::vector<Mat> mats;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const auto& e = entries[j];
    if (e.size() != static_cast<std::size_t>(n * n)) {
      std::ostringstream os;
      os << "matrix " << j << " has " << e.size() << " entries, expected " << n * n;
      throw InvalidMatrix(os.str());
    }
    Mat a = Mat::Zero();
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) a(r, c) = e[static_cast<std::size_t>(r * n + c)];
    }
    mats.push_back(a);
  }
  return MatrixFamily(n, std::move(mats), pairwise_invertible, condition_cap);
}

double MatrixFamily::worst_difference_condition() const {
  double worst = 1.0;
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) {
      worst = std::max(worst, condition_number(difference(i, j), n_));
    }
  }
  return worst;
}

bool MatrixFamily::is_identity_family() const {
  Mat id = Mat::Zero();
  id.topLeftCorner(n_, n_).setIdentity();
  for (const auto& a : matrices_) {
    if ((a - id).cwiseAbs().maxCoeff() > 0.0) return false;
  }
  return true;
}

std::vector<std::vector<double>> MatrixFamily::entries() const {
  std::vector<std::vector<double>> out;
  for (const auto& a : matrices_) {
    std::vector<double> e;
    for (int r = 0; r < n_; ++r) {
      for (int c = 0; c < n_; ++c) e.push_back(a(r, c));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rieszw
