#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rieszw {

// Points and matrices are stored at the maximum supported dimension (2).
// In dimension 1 the second coordinate and every entry outside the top-left
// 1x1 block are zero, so products and norms need no special casing.
using Point = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

inline constexpr int kMaxDim = 2;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RIESZW_ERROR(Name)                                  \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what) : Error(what) {} \
  }

RIESZW_ERROR(InvalidArgument);
RIESZW_ERROR(SingularPoint);
RIESZW_ERROR(OutOfGrid);
RIESZW_ERROR(NotIntegrable);
RIESZW_ERROR(SingularKernel);
RIESZW_ERROR(QuadratureDiverged);
RIESZW_ERROR(InvalidMatrix);
RIESZW_ERROR(DegenerateProfile);
RIESZW_ERROR(MisclassifiedSample);
RIESZW_ERROR(HypothesisFailed);
RIESZW_ERROR(ConfigError);

#undef RIESZW_ERROR

inline void check_dim(int n) {
  if (n < 1 || n > kMaxDim) {
    throw InvalidArgument("dimension must be 1 or 2, got " + std::to_string(n));
  }
}

inline Point make_point(std::span<const double> coords) {
  if (coords.empty() || coords.size() > kMaxDim) {
    throw InvalidArgument("point must have 1 or 2 coordinates");
  }
  Point p = Point::Zero();
  for (std::size_t i = 0; i < coords.size(); ++i) p[static_cast<int>(i)] = coords[i];
  return p;
}

inline Point make_point(double x, double y = 0.0) { return Point(x, y); }

inline std::vector<double> coords_of(const Point& p, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = p[i];
  return out;
}

/// Lebesgue measure of the unit ball in dimension n (n <= 2).
inline double unit_ball_volume(int n) { return n == 1 ? 2.0 : std::numbers::pi; }

/// Surface measure of the unit sphere: 2 points in 1D, 2*pi in 2D.
inline double unit_sphere_measure(int n) { return n == 1 ? 2.0 : 2.0 * std::numbers::pi; }

struct Ball {
  Point center = Point::Zero();
  double radius = 1.0;
  int n = 1;

  Ball() = default;
  Ball(const Point& c, double r, int dim) : center(c), radius(r), n(dim) {
    check_dim(dim);
    if (!(std::isfinite(r) && r > 0.0)) {
      throw InvalidArgument("ball radius must be finite and positive");
    }
  }

  double volume() const { return unit_ball_volume(n) * std::pow(radius, n); }
  bool contains(const Point& x) const { return (x - center).norm() <= radius; }
  Ball dilated(double factor) const { return Ball(center, radius * factor, n); }
};

}  // namespace rieszw
