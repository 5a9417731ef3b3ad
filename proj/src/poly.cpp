#include "rieszw/poly.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace rieszw {

std::vector<Multi> monomial_basis(int n, int degree) {
  check_dim(n);
  if (degree < 0) throw InvalidArgument("polynomial degree must be non-negative");
  std::vector<Multi> out;
  for (int d = 0; d <= degree; ++d) {
    if (n == 1) {
      out.push_back({d, 0});
    } else {
      for (int i = d; i >= 0; --i) out.push_back({i, d - i});
    }
  }
  return out;
}

double unit_ball_moment(int n, const Multi& m) {
  if (n == 1) return m.i % 2 ? 0.0 : 2.0 / (m.i + 1);
  if (m.i % 2 || m.j % 2) return 0.0;
  const double a = 0.5 * (m.i + 1);
  const double b = 0.5 * (m.j + 1);
  return 2.0 * std::tgamma(a) * std::tgamma(b) / ((m.i + m.j + 2) * std::tgamma(a + b));
}

ScaledPolynomial::ScaledPolynomial(int n, int degree, Point center, double radius,
                                   std::vector<double> coeffs)
    : n_(n), degree_(degree), center_(center), radius_(radius), coeffs_(std::move(coeffs)),
      basis_(monomial_basis(n, degree)) {
  if (!(radius > 0.0)) throw InvalidArgument("polynomial radius must be positive");
  if (coeffs_.size() != basis_.size()) throw InvalidArgument("coefficient count does not match degree");
  if (n == 1) center_[1] = 0.0;
}

ScaledPolynomial ScaledPolynomial::zero(int n, int degree, Point center, double radius) {
  return ScaledPolynomial(n, degree, center, radius,
                          std::vector<double>(monomial_basis(n, degree).size(), 0.0));
}

double ScaledPolynomial::eval_unit(const Point& u) const {
  if (n_ == 1) {
    double v = 0.0;
    for (int k = degree_; k >= 0; --k) v = v * u[0] + coeffs_[static_cast<std::size_t>(k)];
    return v;
  }
  double v = 0.0;
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    if (coeffs_[k] == 0.0) continue;
    v += coeffs_[k] * std::pow(u[0], basis_[k].i) * std::pow(u[1], basis_[k].j);
  }
  return v;
}

double ScaledPolynomial::unit_moment(const Multi& m) const {
  double s = 0.0;
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    s += coeffs_[k] * unit_ball_moment(n_, {basis_[k].i + m.i, basis_[k].j + m.j});
  }
  return s;
}

namespace {

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

double ScaledPolynomial::moment(const Multi& beta) const {
  // y = center + radius u, so y^beta expands binomially in u.
  double s = 0.0;
  for (int a = 0; a <= beta.i; ++a) {
    const double ca = binomial(beta.i, a) * std::pow(center_[0], beta.i - a) * std::pow(radius_, a);
    if (ca == 0.0) continue;
    for (int b = 0; b <= (n_ == 2 ? beta.j : 0); ++b) {
      const double cb = binomial(beta.j, b) * std::pow(center_[1], beta.j - b) * std::pow(radius_, b);
      if (cb == 0.0) continue;
      s += ca * cb * unit_moment({a, b});
    }
  }
  return s * std::pow(radius_, n_);
}

ScaledPolynomial ScaledPolynomial::scaled(double c) const {
  auto out = *this;
  for (auto& v : out.coeffs_) v *= c;
  return out;
}

std::vector<double> ScaledPolynomial::roots_1d() const {
  if (n_ != 1) throw InvalidArgument("roots_1d needs a 1D polynomial");
  int deg = degree_;
  const double scale = *std::max_element(coeffs_.begin(), coeffs_.end(),
                                         [](double a, double b) { return std::abs(a) < std::abs(b); });
  while (deg > 0 && std::abs(coeffs_[static_cast<std::size_t>(deg)]) <= 1e-15 * std::abs(scale)) --deg;
  std::vector<double> out;
  if (deg <= 0) return out;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  const double lead = coeffs_[static_cast<std::size_t>(deg)];
  for (int k = 0; k < deg; ++k) comp(0, k) = -coeffs_[static_cast<std::size_t>(deg - 1 - k)] / lead;
  for (int k = 1; k < deg; ++k) comp(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  for (int k = 0; k < deg; ++k) {
    const auto z = es.eigenvalues()(k);
    if (std::abs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z.real()))) continue;
    double x = z.real();
    // Newton polish.
    for (int it = 0; it < 3; ++it) {
      double v = 0.0, dv = 0.0;
      for (int j = deg; j >= 0; --j) {
        dv = dv * x + v;
        v = v * x + coeffs_[static_cast<std::size_t>(j)];
      }
      if (dv == 0.0) break;
      x -= v / dv;
    }
    if (x > -1.0 && x < 1.0) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rieszw
