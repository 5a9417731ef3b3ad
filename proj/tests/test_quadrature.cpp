#include "doctest.h"

#include "rieszw/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace rieszw;

namespace {

// Composite Simpson on [a, b] with m (even) panels.
template <class F>
double simpson(F f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("gauss-legendre tables integrate polynomials up to degree 2k-1") {
  for (int k = 1; k <= 8; ++k) {
    const auto& g = gauss_legendre(k);
    for (int d = 0; d <= 2 * k - 1; ++d) {
      double sum = 0.0;
      for (std::size_t i = 0; i < g.x.size(); ++i) sum += g.w[i] * std::pow(g.x[i], d);
      const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
      CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gauss_legendre(0), InvalidArgument);
}

TEST_CASE("power radial moments match antiderivatives") {
  SingularFactor f{Point::Zero(), RadialKind::Power, -0.5};
  CHECK(f.radial_moment(0.0, 1.0, 1) == doctest::Approx(2.0));
  CHECK(f.radial_moment(0.25, 1.0, 1) == doctest::Approx(1.0));
  SingularFactor g{Point::Zero(), RadialKind::Power, -1.0};
  CHECK(g.radial_moment(0.0, 2.0, 2) == doctest::Approx(2.0));
  CHECK(g.radial_moment(1.0, std::exp(1.0), 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(g.radial_moment(0.0, 1.0, 1), NotIntegrable);
  CHECK_FALSE(g.locally_integrable(1));
  CHECK(g.locally_integrable(2));
}

TEST_CASE("inverse-log radial moment matches a substituted Simpson oracle") {
  // Integral over [0, R] of rho^{n-1} log(1/rho)^a for R < 1/e; substituting
  // rho = e^{-t} turns it into an integral of t^a e^{-n t} over [log(1/R), inf).
  for (int n : {1, 2}) {
    for (double a : {0.5, 1.0, 2.0}) {
      SingularFactor f{Point::Zero(), RadialKind::InverseLog, a};
      const double r = 0.2;
      const double got = f.radial_moment(0.0, r, n);
      const double t0 = -std::log(r);
      const double oracle =
          simpson([&](double t) { return std::pow(t, a) * std::exp(-n * t); }, t0, t0 + 80.0, 200000);
      CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
  // Crossing 1/e adds the flat part.
  SingularFactor f{Point::Zero(), RadialKind::InverseLog, 1.0};
  const double inv_e = std::exp(-1.0);
  CHECK(f.radial_moment(0.0, 1.0, 1) == doctest::Approx(f.radial_moment(0.0, inv_e, 1) + 1.0 - inv_e));
}

TEST_CASE("ball rule integrates a 1D power singularity exactly") {
  const Ball b(Point::Zero(), 1.0, 1);
  const std::vector<SingularFactor> sing{{Point::Zero(), RadialKind::Power, -0.5}};
  QuadratureScheme q;
  q.resolution = 16;
  const auto rule = ball_rule(b, sing, q);
  const double v = rule.integrate([](const Point& y) { return std::pow(std::abs(y[0]), -0.5); });
  CHECK(v == doctest::Approx(4.0).epsilon(1e-10));
  // Off-centre singularity inside the ball.
  const Ball c(Point(0.3, 0.0), 1.0, 1);
  const double w = ball_rule(c, sing, q).integrate(
      [](const Point& y) { return std::pow(std::abs(y[0]), -0.5); });
  CHECK(w == doctest::Approx(2.0 * std::sqrt(1.3) + 2.0 * std::sqrt(0.7)).epsilon(1e-8));
}

TEST_CASE("ball rule preserves polynomial moments in 1D") {
  const Ball b(Point(0.7, 0.0), 0.4, 1);
  QuadratureScheme q;
  q.resolution = 16;
  const auto rule = ball_rule(b, {}, q);
  for (int d = 0; d <= 7; ++d) {
    const double got = rule.integrate([&](const Point& y) { return std::pow(y[0], d); });
    const double exact = (std::pow(1.1, d + 1) - std::pow(0.3, d + 1)) / (d + 1);
    CHECK(got == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("2D ball rule handles area, moments and a radial singularity") {
  QuadratureScheme q;
  q.resolution = 32;
  const Ball unit(Point::Zero(), 1.0, 2);
  CHECK(ball_rule(unit, {}, q).integrate([](const Point&) { return 1.0; }) ==
        doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK(ball_rule(unit, {}, q).integrate([](const Point& y) { return y[0] * y[0]; }) ==
        doctest::Approx(std::numbers::pi / 4).epsilon(1e-10));
  const std::vector<SingularFactor> sing{{Point::Zero(), RadialKind::Power, -1.0}};
  CHECK(ball_rule(unit, sing, q).integrate([](const Point& y) { return 1.0 / y.norm(); }) ==
        doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
  // Singular point off the centre: area is still exact.
  const std::vector<SingularFactor> off{{Point(0.4, 0.2), RadialKind::Power, -1.0}};
  const Ball shifted(Point::Zero(), 1.0, 2);
  CHECK(ball_rule(shifted, off, q).integrate([](const Point&) { return 1.0; }) ==
        doctest::Approx(std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("exclude-and-refine converges toward the analytic value") {
  const Ball b(Point::Zero(), 1.0, 1);
  const std::vector<SingularFactor> sing{{Point::Zero(), RadialKind::Power, -0.5}};
  QuadratureScheme q;
  q.policy = SingularityPolicy::ExcludeAndRefine;
  double prev_err = 1e9;
  for (int res : {16, 64, 256, 1024}) {
    q.resolution = res;
    const auto rule = ball_rule(b, sing, q);
    CHECK(rule.excluded_cells == 2);
    const double err =
        std::abs(rule.integrate([](const Point& y) { return std::pow(std::abs(y[0]), -0.5); }) - 4.0);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.2);
}

TEST_CASE("whole-space rule integrates decaying functions with analytic tails") {
  QuadratureScheme q;
  SpaceLayout lay;
  lay.n = 1;
  lay.breaks = {-1.0, 1.0};
  lay.fine_intervals = {{-1.0, 1.0}};
  lay.fine_step = 0.01;
  lay.far_distance = 50.0;
  const auto rule = whole_space_rule(lay, {}, q);
  std::vector<double> vals;
  for (const auto& nd : rule.nodes) vals.push_back(1.0 / (1.0 + nd.y[0] * nd.y[0]));
  const auto r = integrate_space(rule, vals);
  CHECK_FALSE(r.tail_divergent);
  CHECK(r.total() == doctest::Approx(std::numbers::pi).epsilon(1e-4));

  std::vector<double> slow;
  for (const auto& nd : rule.nodes) slow.push_back(std::pow(1.0 + nd.y[0] * nd.y[0], -0.25));
  CHECK(integrate_space(rule, slow).tail_divergent);

  SpaceLayout lay2;
  lay2.n = 2;
  lay2.fine_radius = 1.0;
  lay2.fine_step = 0.02;
  lay2.far_distance = 50.0;
  const auto rule2 = whole_space_rule(lay2, {}, q);
  std::vector<double> v2;
  for (const auto& nd : rule2.nodes) v2.push_back(std::pow(1.0 + nd.y.squaredNorm(), -2.0));
  CHECK(integrate_space(rule2, v2).total() == doctest::Approx(std::numbers::pi).epsilon(1e-4));
}

TEST_CASE("scheme validation") {
  QuadratureScheme q;
  q.resolution = 8;
  CHECK_THROWS_AS(q.validate(), InvalidArgument);
  q.resolution = 0;
  CHECK(q.cells_per_radius(1) == 512);
  CHECK(q.cells_per_radius(2) == 64);
  CHECK(q.refined(4, 1).resolution == 2048);
}
