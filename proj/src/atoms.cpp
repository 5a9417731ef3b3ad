#include "rieszw/atoms.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace rieszw {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Integral of |P(u)|^p0 over [-1, 1], split at the real roots and graded
// geometrically toward every break so the |t|^p0 behaviour at a root is resolved.
double unit_power_integral_1d(const ScaledPolynomial& poly, double p0) {
  std::vector<double> br{-1.0};
  for (double r : poly.roots_1d()) br.push_back(r);
  br.push_back(1.0);
  const auto& g = gauss_legendre(16);
  const auto f = [&](double u) { return std::pow(std::abs(poly.eval_unit(Point(u, 0.0))), p0); };
  const auto gl = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * f(0.5 * (a + b) + 0.5 * (b - a) * g.x[k]);
    return 0.5 * (b - a) * s;
  };
  constexpr int kLevels = 14;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double a = br[i];
    const double b = br[i + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    // Nodes a + half 4^{-k} and b - half 4^{-k}, k = 0..kLevels.
    std::vector<double> pts{a};
    for (int k = kLevels; k >= 1; --k) pts.push_back(a + half * std::ldexp(1.0, -2 * k));
    pts.push_back(a + half);
    for (int k = 1; k <= kLevels; ++k) pts.push_back(b - half * std::ldexp(1.0, -2 * k));
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) total += gl(pts[k], pts[k + 1]);
  }
  return total;
}

double unit_power_integral_2d(const ScaledPolynomial& poly, double p0) {
  QuadratureScheme q;
  q.resolution = 64;
  q.gauss_points = 6;
  const auto rule = ball_rule(Ball(Point::Zero(), 1.0, 2), {}, q);
  return rule.integrate([&](const Point& u) { return std::pow(std::abs(poly.eval_unit(u)), p0); });
}

// Integral of t^k over [a, b].
double mono(double a, double b, int k) { return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1); }

std::vector<Point> nonzero_cell_corners(const GridSamples& g) {
  std::vector<Point> out;
  const int ny = g.n == 2 ? g.count[1] : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < g.count[0]; ++i) {
      if (g.values[static_cast<std::size_t>(j) * static_cast<std::size_t>(g.count[0]) + static_cast<std::size_t>(i)] == 0.0) {
        continue;
      }
      const double x0 = g.origin[0] + g.h[0] * i;
      const double x1 = x0 + g.h[0];
      if (g.n == 1) {
        out.emplace_back(x0, 0.0);
        out.emplace_back(x1, 0.0);
      } else {
        const double y0 = g.origin[1] + g.h[1] * j;
        const double y1 = y0 + g.h[1];
        out.emplace_back(x0, y0);
        out.emplace_back(x1, y0);
        out.emplace_back(x0, y1);
        out.emplace_back(x1, y1);
      }
    }
  }
  return out;
}

double ball_norm_bound(const Ball& b, const AtomParams& params, double w_ball) {
  return std::pow(b.volume(), 1.0 / params.p0) * std::pow(w_ball, -1.0 / params.p);
}

}  // namespace

AtomParamRange admissible_params(const CriticalIndices& indices, int n, double p) {
  check_dim(n);
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("atom exponent p must lie in (0, 1]");
  if (indices.q_unbounded) throw HypothesisFailed("weight is in no A_q class up to the index cap");
  AtomParamRange out;
  out.n = n;
  out.p = p;
  out.indices = indices;
  out.d_min = std::max(0, static_cast<int>(std::floor(n * (indices.q_hi / p - 1.0))));
  if (std::isinf(indices.r_w)) {
    out.p0_threshold = 1.0;
  } else {
    const double r = indices.r_lo;
    out.p0_threshold = r > 1.0 ? std::max(1.0, p * r / (r - 1.0)) : kInfinity;
  }
  return out;
}

AtomParamRange admissible_params(const WeightSpec& w, double p, const BallFamily& family,
                                 const QuadratureScheme& scheme, double tol, double cap) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("atom exponent p must lie in (0, 1]");
  return admissible_params(critical_indices(w, family, scheme, tol, cap), w.dim(), p);
}

void AtomParams::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("atom exponent p must lie in (0, 1]");
  if (!(p0 > 1.0) || !std::isfinite(p0)) throw InvalidArgument("atom exponent p0 must be finite and above 1");
  if (d < 0) throw InvalidArgument("moment degree d must be non-negative");
}

void AtomParams::validate(const AtomParamRange& range) const {
  validate();
  if (range.n != dim()) throw InvalidArgument("parameter range has another dimension");
  if (!(p0 > range.p0_threshold)) {
    throw InvalidArgument("p0 = " + std::to_string(p0) + " is not above the threshold " +
                          std::to_string(range.p0_threshold));
  }
  if (d < range.d_min) {
    throw InvalidArgument("d = " + std::to_string(d) + " is below the minimum " + std::to_string(range.d_min));
  }
}

double profile_norm(const SampledFunction& f, double p0) {
  if (!(p0 > 0.0) || !std::isfinite(p0)) throw InvalidArgument("norm exponent must be finite and positive");
  const double fac = std::pow(std::abs(f.factor()), p0);
  switch (f.kind()) {
    case SampledFunction::Kind::Indicator:
      return std::pow(fac * f.support().volume(), 1.0 / p0);
    case SampledFunction::Kind::Polynomial: {
      const auto& poly = *f.profile();
      const double unit = poly.dim() == 1 ? unit_power_integral_1d(poly, p0) : unit_power_integral_2d(poly, p0);
      return std::pow(fac * unit * std::pow(poly.radius(), poly.dim()), 1.0 / p0);
    }
    case SampledFunction::Kind::Grid: {
      const auto& g = *f.samples();
      double s = 0.0;
      for (double v : g.values) s += std::pow(std::abs(v), p0);
      const double cell = g.n == 2 ? g.h[0] * g.h[1] : g.h[0];
      return std::pow(fac * s * cell, 1.0 / p0);
    }
  }
  throw InvalidArgument("unknown function kind");
}

double profile_moment(const SampledFunction& f, const Multi& beta) {
  if (f.absolute()) throw InvalidArgument("moments need a signed profile");
  const int n = f.dim();
  switch (f.kind()) {
    case SampledFunction::Kind::Indicator: {
      ScaledPolynomial one(n, 0, f.support().center, f.support().radius, {1.0});
      return f.factor() * one.moment(beta);
    }
    case SampledFunction::Kind::Polynomial:
      return f.factor() * f.profile()->moment(beta);
    case SampledFunction::Kind::Grid: {
      const auto& g = *f.samples();
      const int ny = n == 2 ? g.count[1] : 1;
      double s = 0.0;
      for (int j = 0; j < ny; ++j) {
        const double yint = n == 2 ? mono(g.origin[1] + g.h[1] * j, g.origin[1] + g.h[1] * (j + 1), beta.j) : 1.0;
        for (int i = 0; i < g.count[0]; ++i) {
          const double v = g.values[static_cast<std::size_t>(j) * static_cast<std::size_t>(g.count[0]) +
                                    static_cast<std::size_t>(i)];
          if (v == 0.0) continue;
          s += v * yint * mono(g.origin[0] + g.h[0] * i, g.origin[0] + g.h[0] * (i + 1), beta.i);
        }
      }
      return f.factor() * s;
    }
  }
  throw InvalidArgument("unknown function kind");
}

ScaledPolynomial project_moments(const ScaledPolynomial& poly, int d) {
  if (d < 0) throw InvalidArgument("moment degree d must be non-negative");
  const int n = poly.dim();
  const auto& basis = poly.basis();
  std::size_t low = 0;
  while (low < basis.size() && basis[low].degree() <= d) ++low;
  if (low == 0) return poly;
  Eigen::MatrixXd gram(low, low);
  Eigen::VectorXd rhs(low);
  for (std::size_t k = 0; k < low; ++k) {
    for (std::size_t l = 0; l < low; ++l) {
      gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
          unit_ball_moment(n, {basis[k].i + basis[l].i, basis[k].j + basis[l].j});
    }
    rhs(static_cast<Eigen::Index>(k)) = poly.unit_moment(basis[k]);
  }
  const Eigen::VectorXd x = gram.ldlt().solve(rhs);
  auto c = poly.coeffs();
  for (std::size_t k = 0; k < low; ++k) c[k] -= x(static_cast<Eigen::Index>(k));
  return ScaledPolynomial(n, poly.degree(), poly.center(), poly.radius(), std::move(c));
}

namespace {

// Squared unit-ball L^2 norm of a profile in the scaled variable.
double unit_l2_squared(const ScaledPolynomial& poly) {
  double s = 0.0;
  const auto& basis = poly.basis();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    for (std::size_t l = 0; l < basis.size(); ++l) {
      s += poly.coeffs()[k] * poly.coeffs()[l] *
           unit_ball_moment(poly.dim(), {basis[k].i + basis[l].i, basis[k].j + basis[l].j});
    }
  }
  return s;
}

}  // namespace

Atom construct_atom(const Ball& b, const AtomParams& params, std::uint64_t seed,
                    const QuadratureScheme& scheme) {
  params.validate();
  if (b.n != params.dim()) throw InvalidArgument("atom ball and weight dimensions differ");
  if (!(b.radius > 0.0)) throw InvalidArgument("atom radius must be positive");
  const int n = b.n;
  const int degree = params.d + 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> c(monomial_basis(n, degree).size());
  for (auto& v : c) v = normal(rng);
  const ScaledPolynomial raw(n, degree, b.center, b.radius, std::move(c));
  const auto projected = project_moments(raw, params.d);
  const double before = unit_l2_squared(raw);
  const double after = unit_l2_squared(projected);
  if (!(after > 0.0) || std::sqrt(after / before) < 1e-12) {
    throw DegenerateProfile("projected profile for seed " + std::to_string(seed) + " is numerically zero");
  }
  const double w_ball = weighted_measure(params.weight, 1.0, b, scheme);
  const double target = ball_norm_bound(b, params, w_ball);
  const double current = profile_norm(SampledFunction::polynomial(projected), params.p0);
  const auto profile = SampledFunction::polynomial(projected.scaled(target / current));
  return Atom{b, profile, params, seed, profile_norm(profile, params.p0), w_ball};
}

AtomValidation validate_atom(const Atom& a, const AtomParams& params, const QuadratureScheme& scheme) {
  AtomValidation out;
  const Ball& b = a.ball;
  const auto& f = a.profile;
  if (f.kind() == SampledFunction::Kind::Grid) {
    double need = 0.0;
    for (const auto& corner : nonzero_cell_corners(*f.samples())) need = std::max(need, (corner - b.center).norm());
    out.support_slack = b.radius - need;
  } else {
    out.support_slack = b.radius - ((f.support().center - b.center).norm() + f.support().radius);
  }
  out.a1 = f.dim() == b.n && out.support_slack >= -1e-12 * b.radius;

  const double w_ball = weighted_measure(params.weight, 1.0, b, scheme);
  out.norm = profile_norm(f, params.p0);
  out.norm_bound = ball_norm_bound(b, params, w_ball);
  out.norm_margin = out.norm / out.norm_bound - 1.0;
  out.a2 = out.norm_margin <= kNormTolerance;

  const double base = out.norm * std::pow(b.radius, b.n * (1.0 - 1.0 / params.p0));
  for (const auto& beta : monomial_basis(b.n, params.d)) {
    const double m = std::abs(profile_moment(f, beta));
    const double scale = base * std::pow(b.radius, beta.degree());
    const double ratio = m == 0.0 ? 0.0 : (scale > 0.0 ? m / scale : kInfinity);
    if (ratio > out.moment_worst) {
      out.moment_worst = ratio;
      out.moment_witness = beta;
    }
  }
  out.a3 = out.moment_worst <= kMomentTolerance;
  return out;
}

std::uint64_t campaign_seed(std::uint64_t seed, std::size_t i) {
  return seed + static_cast<std::uint64_t>(i) * kGolden;
}

std::vector<Atom> sample_atom_campaign(const AtomParams& params, const CampaignSpec& spec,
                                       const QuadratureScheme& scheme, Exec exec) {
  params.validate();
  if (spec.count < 1) throw InvalidArgument("campaign needs at least one atom");
  if (spec.radii.empty() || spec.centers.empty()) throw InvalidArgument("campaign needs radii and centres");
  if (spec.max_retries < 0) throw InvalidArgument("max_retries must be non-negative");
  const std::size_t nr = spec.radii.size();
  const std::size_t nc = spec.centers.size();
  auto slots = map_indices<std::optional<Atom>>(static_cast<std::size_t>(spec.count), exec, [&](std::size_t i) {
    const Ball b(spec.centers[(i / nr) % nc], spec.radii[i % nr], params.dim());
    const std::uint64_t s = campaign_seed(spec.seed, i);
    for (int attempt = 0;; ++attempt) {
      try {
        return std::optional<Atom>(construct_atom(b, params, s + static_cast<std::uint64_t>(attempt), scheme));
      } catch (const DegenerateProfile&) {
        if (attempt >= spec.max_retries) {
          throw DegenerateProfile("atom " + std::to_string(i) + " stayed degenerate after " +
                                  std::to_string(spec.max_retries) + " resamples");
        }
      }
    }
  });
  std::vector<Atom> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

nlohmann::json to_json(const Atom& a) {
  nlohmann::json j;
  j["center"] = std::vector<double>(a.ball.center.data(), a.ball.center.data() + a.ball.n);
  j["radius"] = a.ball.radius;
  j["n"] = a.ball.n;
  j["seed"] = a.seed;
  j["params"] = {{"p", a.params.p}, {"p0", a.params.p0}, {"d", a.params.d}, {"weight", a.params.weight.describe()}};
  j["norm_p0"] = a.norm_p0;
  j["w_ball"] = a.w_ball;
  const auto& f = a.profile;
  j["factor"] = f.factor();
  switch (f.kind()) {
    case SampledFunction::Kind::Indicator:
      j["profile"] = "indicator";
      break;
    case SampledFunction::Kind::Polynomial:
      j["profile"] = "polynomial";
      j["degree"] = f.profile()->degree();
      j["coeffs"] = f.profile()->coeffs();
      break;
    case SampledFunction::Kind::Grid: {
      const auto& g = *f.samples();
      j["profile"] = "grid";
      j["origin"] = std::vector<double>(g.origin.begin(), g.origin.begin() + g.n);
      j["h"] = std::vector<double>(g.h.begin(), g.h.begin() + g.n);
      j["count"] = std::vector<int>(g.count.begin(), g.count.begin() + g.n);
      j["values"] = g.values;
      break;
    }
  }
  return j;
}

Atom atom_from_json(const nlohmann::json& j, const WeightSpec& w) {
  try {
    const int n = j.at("n").get<int>();
    check_dim(n);
    if (n != w.dim()) throw InvalidArgument("atom record and weight dimensions differ");
    const Ball b(make_point(j.at("center").get<std::vector<double>>()), j.at("radius").get<double>(), n);
    const auto& pj = j.at("params");
    AtomParams params{w, pj.at("p").get<double>(), pj.at("p0").get<double>(), pj.at("d").get<int>()};
    params.validate();
    const std::string kind = j.at("profile").get<std::string>();
    std::optional<SampledFunction> f;
    if (kind == "indicator") {
      f = SampledFunction::indicator(b);
    } else if (kind == "polynomial") {
      f = SampledFunction::polynomial(ScaledPolynomial(n, j.at("degree").get<int>(), b.center, b.radius,
                                                       j.at("coeffs").get<std::vector<double>>()));
    } else if (kind == "grid") {
      GridSamples g;
      g.n = n;
      const auto o = j.at("origin").get<std::vector<double>>();
      const auto h = j.at("h").get<std::vector<double>>();
      const auto c = j.at("count").get<std::vector<int>>();
      if (o.size() != static_cast<std::size_t>(n) || h.size() != o.size() || c.size() != o.size()) {
        throw InvalidArgument("grid profile fields need one entry per axis");
      }
      for (std::size_t k = 0; k < o.size(); ++k) {
        g.origin[k] = o[k];
        g.h[k] = h[k];
        g.count[k] = c[k];
      }
      g.values = j.at("values").get<std::vector<double>>();
      f = SampledFunction::grid(std::move(g));
    } else {
      throw InvalidArgument("unknown atom profile kind '" + kind + "'");
    }
    return Atom{b, f->scaled(j.value("factor", 1.0)), params, j.value("seed", std::uint64_t{0}),
                j.value("norm_p0", 0.0), j.value("w_ball", 0.0)};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed atom record: ") + e.what());
  }
}

}  // namespace rieszw
