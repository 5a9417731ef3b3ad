#pragma once

#include "rieszw/core.hpp"

#include <vector>

namespace rieszw {

/// Exponent pair of the monomial u1^i u2^j (j = 0 in dimension 1).
struct Multi {
  int i = 0;
  int j = 0;
  int degree() const { return i + j; }
  bool operator==(const Multi&) const = default;
};

/// Monomials of total degree <= degree, graded by degree then by decreasing i.
std::vector<Multi> monomial_basis(int n, int degree);

/// Integral of u^m over the unit ball.
double unit_ball_moment(int n, const Multi& m);

/// p(y) = sum_k c_k u^{m_k} with u = (y - center) / radius. Coefficients are
/// stored in monomial_basis order.
class ScaledPolynomial {
 public:
  ScaledPolynomial(int n, int degree, Point center, double radius, std::vector<double> coeffs);
  static ScaledPolynomial zero(int n, int degree, Point center, double radius);

  int dim() const { return n_; }
  int degree() const { return degree_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<Multi>& basis() const { return basis_; }

  double operator()(const Point& y) const { return eval_unit((y - center_) / radius_); }
  double eval_unit(const Point& u) const;

  /// Exact integral of y^beta p(y) over B(center, radius).
  double moment(const Multi& beta) const;
  /// Exact integral of u^m p over the unit ball in the scaled variable.
  double unit_moment(const Multi& m) const;

  ScaledPolynomial scaled(double c) const;
  /// Real roots in (-1, 1) of the 1D profile in the scaled variable, sorted.
  std::vector<double> roots_1d() const;

 private:
  int n_;
  int degree_;
  Point center_;
  double radius_;
  std::vector<double> coeffs_;
  std::vector<Multi> basis_;
};

}  // namespace rieszw
