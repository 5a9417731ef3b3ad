#include "doctest.h"

#include "rieszw/atoms.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace rieszw;

namespace {

BallFamily small_family(const WeightSpec& w) {
  auto p = BallFamilyPolicy::defaults(w.dim());
  p.half_width = 2;
  p.k_min = -5;
  p.k_max = 2;
  p.extra_centers = w.singular_centers();
  return BallFamily::dyadic(p);
}

// Composite midpoint rule of g over [a, b].
template <class G>
double midpoint(G g, double a, double b, int cells) {
  const double h = (b - a) / cells;
  double s = 0.0;
  for (int i = 0; i < cells; ++i) s += g(a + (i + 0.5) * h);
  return s * h;
}

Atom sign_atom(double c) {
  GridSamples g;
  g.n = 1;
  g.origin = {-1.0, 0.0};
  g.h = {1.0, 1.0};
  g.count = {2, 1};
  g.values = {-c, c};
  return Atom{Ball(Point::Zero(), 1.0, 1), SampledFunction::grid(g),
              AtomParams{WeightSpec::constant(1), 1.0, 2.0, 0}, 0, 0.0, 0.0};
}

}  // namespace

TEST_CASE("admissible parameters from the critical indices") {
  QuadratureScheme q;
  const auto one = WeightSpec::constant(1);
  const auto r1 = admissible_params(one, 1.0, small_family(one), q, 0.05);
  CHECK(r1.d_min == 0);
  CHECK(r1.p0_threshold == 1.0);
  CHECK(r1.indices.q_tilde == 1.0);
  CHECK(std::isinf(r1.indices.r_w));

  const auto half = WeightSpec::power_weight(1, 0.5);
  const auto r2 = admissible_params(half, 1.0, small_family(half), q, 0.05);
  CHECK(r2.indices.q_tilde == doctest::Approx(1.5).epsilon(0.05));
  CHECK(r2.d_min == 0);
  CHECK(r2.p0_threshold == 1.0);

  // |x|^b with b < 0 is in RH_r exactly for r b > -1, so r_w = 8 for b = -1/8.
  const auto neg = WeightSpec::power_weight(1, -0.125);
  const auto r3 = admissible_params(neg, 0.75, small_family(neg), q, 0.05);
  CHECK(r3.indices.r_w == doctest::Approx(8.0).epsilon(0.03));
  CHECK(r3.d_min == 0);
  CHECK(r3.p0_threshold == 1.0);

  // A smaller p raises the minimal degree: floor(1.5 / 0.25 - 1) = 5.
  CHECK(admissible_params(half, 0.25, small_family(half), q, 0.05).d_min == 5);
  CHECK_THROWS_AS(admissible_params(one, 1.5, small_family(one), q), InvalidArgument);

  AtomParams bad{one, 1.0, 1.0, 0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  AtomParams low_d{half, 0.25, 2.0, 2};
  CHECK_THROWS_AS(low_d.validate(admissible_params(half, 0.25, small_family(half), q, 0.05)), InvalidArgument);
}

TEST_CASE("the sign atom meets the norm bound with equality") {
  QuadratureScheme q;
  const auto a = sign_atom(0.5);
  const auto v = validate_atom(a, a.params, q);
  CHECK(v.a1);
  CHECK(v.a2);
  CHECK(v.a3);
  CHECK(v.norm == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK(std::abs(v.norm_margin) <= 1e-8);

  auto doubled = a;
  doubled.profile = a.profile.scaled(2.0);
  const auto vd = validate_atom(doubled, a.params, q);
  CHECK_FALSE(vd.a2);
  CHECK(vd.norm_margin == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_FALSE(vd.pass());

  auto flat = a;
  flat.profile = SampledFunction::indicator(a.ball).scaled(0.5);
  const auto vf = validate_atom(flat, a.params, q);
  CHECK_FALSE(vf.a3);
  CHECK(vf.moment_witness == Multi{0, 0});

  auto wide = a;
  wide.ball = Ball(Point::Zero(), 0.5, 1);
  CHECK_FALSE(validate_atom(wide, a.params, q).a1);
}

TEST_CASE("constructed atoms match independent norm and moment oracles") {
  QuadratureScheme q;
  const auto w = WeightSpec::power_weight(1, 0.5);
  const AtomParams params{w, 1.0, 2.0, 1};
  const Ball b(make_point(0.75), 0.5, 1);
  const auto a = construct_atom(b, params, 42, q);
  const auto f = [&](double y) { return a.profile(make_point(y)); };
  const double lo = 0.25, hi = 1.25;
  for (int k = 0; k <= 1; ++k) {
    const double m = midpoint([&](double y) { return std::pow(y, k) * f(y); }, lo, hi, 200000);
    CHECK(std::abs(m) < 1e-8);
  }
  // The projection leaves the quadratic moment nonzero.
  CHECK(std::abs(midpoint([&](double y) { return y * y * f(y); }, lo, hi, 200000)) > 1e-6);
  const double norm = std::sqrt(midpoint([&](double y) { return f(y) * f(y); }, lo, hi, 200000));
  const double w_ball = (std::pow(hi, 1.5) - std::pow(lo, 1.5)) / 1.5;
  CHECK(norm == doctest::Approx(std::sqrt(1.0) / w_ball).epsilon(1e-8));
  CHECK(a.w_ball == doctest::Approx(w_ball).epsilon(1e-12));
  const auto v = validate_atom(a, params, q);
  CHECK(v.pass());
  CHECK(std::abs(v.norm_margin) < 1e-12);
}

TEST_CASE("non-integer p0 norms agree with a fine midpoint oracle") {
  QuadratureScheme q;
  const AtomParams params{WeightSpec::constant(1), 0.75, 1.5, 0};
  const auto a = construct_atom(Ball(Point::Zero(), 1.0, 1), params, 7, q);
  const double oracle = std::pow(
      midpoint([&](double y) { return std::pow(std::abs(a.profile(make_point(y))), 1.5); }, -1.0, 1.0, 400000),
      1.0 / 1.5);
  CHECK(a.norm_p0 == doctest::Approx(oracle).epsilon(1e-8));
  // |B|^{1/p0} w(B)^{-1/p} with w = 1 and |B| = 2.
  CHECK(a.norm_p0 == doctest::Approx(std::pow(2.0, 1.0 / 1.5 - 1.0 / 0.75)).epsilon(1e-12));
}

TEST_CASE("2D atoms pass validation and match a polar oracle") {
  QuadratureScheme q;
  const AtomParams params{WeightSpec::constant(2), 1.0, 2.0, 1};
  const Ball b(make_point(0.5, -0.25), 0.5, 2);
  const auto a = construct_atom(b, params, 3, q);
  CHECK(validate_atom(a, params, q).pass());
  // Polar midpoint oracle for the zeroth and first moments and the L^2 norm.
  const int nr = 400, nt = 400;
  double m0 = 0.0, mx = 0.0, my = 0.0, l2 = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double rho = (i + 0.5) / nr * b.radius;
    for (int j = 0; j < nt; ++j) {
      const double t = (j + 0.5) / nt * 2.0 * std::numbers::pi;
      const Point y = b.center + rho * make_point(std::cos(t), std::sin(t));
      const double da = rho * (b.radius / nr) * (2.0 * std::numbers::pi / nt);
      const double v = a.profile(y);
      m0 += v * da;
      mx += y[0] * v * da;
      my += y[1] * v * da;
      l2 += v * v * da;
    }
  }
  const double scale = a.norm_p0 * b.radius;
  CHECK(std::abs(m0) < 1e-4 * scale);
  CHECK(std::abs(mx) < 1e-4 * scale);
  CHECK(std::abs(my) < 1e-4 * scale);
  CHECK(std::sqrt(l2) == doctest::Approx(a.norm_p0).epsilon(1e-4));
}

TEST_CASE("every constructed atom validates across seeds, weights and scales") {
  QuadratureScheme q;
  const std::vector<AtomParams> cases{
      {WeightSpec::constant(1), 1.0, 2.0, 0},
      {WeightSpec::power_weight(1, 0.5), 1.0, 2.0, 0},
      {WeightSpec::power_weight(1, -0.125), 0.75, 1.5, 0},
      {WeightSpec::power_weight(1, 0.5), 0.5, 3.0, 2},
  };
  int checked = 0;
  for (const auto& params : cases) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const double r = std::ldexp(1.0, static_cast<int>(seed % 3) * 2 - 2);
      const Ball b(make_point(static_cast<double>(seed % 5) - 2.0), r, 1);
      const auto a = construct_atom(b, params, seed * 7919 + 1, q);
      const auto v = validate_atom(a, params, q);
      CAPTURE(seed);
      CHECK(v.pass());
      CHECK(std::abs(v.norm_margin) < 1e-10);
      ++checked;
    }
  }
  CHECK(checked == 400);
}

TEST_CASE("moment projection is idempotent and kills low moments") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int n : {1, 2}) {
    for (int d : {0, 1, 2, 3}) {
      for (int t = 0; t < 20; ++t) {
        std::vector<double> c(monomial_basis(n, d + 2).size());
        for (auto& v : c) v = normal(rng);
        const ScaledPolynomial p(n, d + 2, make_point(0.3, -0.1), 0.7, c);
        const auto once = project_moments(p, d);
        const auto twice = project_moments(once, d);
        double diff = 0.0, size = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
          diff = std::max(diff, std::abs(once.coeffs()[k] - twice.coeffs()[k]));
          size = std::max(size, std::abs(once.coeffs()[k]));
        }
        CHECK(diff <= 1e-12 * size);
        for (const auto& beta : monomial_basis(n, d)) CHECK(std::abs(once.unit_moment(beta)) < 1e-12 * size);
      }
    }
  }
  // A profile of degree <= d projects to zero.
  const ScaledPolynomial low(1, 1, Point::Zero(), 1.0, {2.0, -3.0});
  const auto gone = project_moments(low, 1);
  for (double v : gone.coeffs()) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("validation is covariant under dilation for the constant weight") {
  QuadratureScheme q;
  for (int n : {1, 2}) {
    const AtomParams params{WeightSpec::constant(n), 1.0, 2.0, 0};
    const auto a = construct_atom(Ball(Point::Zero(), 1.0, n), params, 11, q);
    const auto base = validate_atom(a, params, q);
    REQUIRE(base.pass());
    for (double lambda : {0.5, 2.0}) {
      // lambda^{n/p} a(lambda y) on B(0, 1 / lambda) has the same scaled coefficients.
      const auto& poly = *a.profile.profile();
      const ScaledPolynomial scaled(n, poly.degree(), Point::Zero(), 1.0 / lambda, poly.coeffs());
      Atom b = a;
      b.ball = Ball(Point::Zero(), 1.0 / lambda, n);
      b.profile = SampledFunction::polynomial(scaled).scaled(std::pow(lambda, n / params.p));
      const auto v = validate_atom(b, params, q);
      CAPTURE(n);
      CAPTURE(lambda);
      CHECK(v.pass());
      CHECK(v.norm_margin == doctest::Approx(base.norm_margin).epsilon(1e-9));
    }
  }
}

TEST_CASE("atom campaigns are deterministic") {
  QuadratureScheme q;
  const AtomParams params{WeightSpec::power_weight(1, 0.5), 1.0, 2.0, 0};
  CampaignSpec spec;
  spec.count = 1;
  spec.seed = 99;
  const auto single = sample_atom_campaign(params, spec, q);
  const auto direct = construct_atom(Ball(Point::Zero(), 1.0, 1), params, 99, q);
  CHECK(single.front().profile.profile()->coeffs() == direct.profile.profile()->coeffs());

  spec.count = 100;
  spec.radii = {0.25, 1.0, 4.0};
  spec.centers = {make_point(-1.0), make_point(0.0), make_point(2.0)};
  const auto first = sample_atom_campaign(params, spec, q, Exec::Parallel);
  const auto second = sample_atom_campaign(params, spec, q, Exec::Serial);
  REQUIRE(first.size() == 100);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].seed == campaign_seed(99, i));
    CHECK(first[i].ball.radius == spec.radii[i % 3]);
    CHECK(first[i].ball.center == spec.centers[(i / 3) % 3]);
    CHECK(first[i].profile.profile()->coeffs() == second[i].profile.profile()->coeffs());
    CHECK(to_json(first[i]).dump() == to_json(second[i]).dump());
    CHECK(validate_atom(first[i], params, q).pass());
  }
  spec.count = 0;
  CHECK_THROWS_AS(sample_atom_campaign(params, spec, q), InvalidArgument);
}

TEST_CASE("atom records round-trip through JSON") {
  QuadratureScheme q;
  const AtomParams params{WeightSpec::power_weight(1, 0.5), 1.0, 2.0, 1};
  const auto a = construct_atom(Ball(make_point(1.5), 0.25, 1), params, 5, q);
  const auto back = atom_from_json(nlohmann::json::parse(to_json(a).dump()), params.weight);
  CHECK(back.profile.profile()->coeffs() == a.profile.profile()->coeffs());
  CHECK(back.ball.center == a.ball.center);
  CHECK(back.params.d == 1);
  CHECK(back.seed == 5);
  const auto s = sign_atom(0.5);
  const auto sb = atom_from_json(to_json(s), s.params.weight);
  CHECK(validate_atom(sb, s.params, q).pass());
  CHECK_THROWS_AS(atom_from_json(nlohmann::json{{"n", 1}}, params.weight), InvalidArgument);
}
