#include "rieszw/operators.hpp"

#include "rieszw/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rieszw {

namespace {

constexpr double kKernelFloor = 1e-14;

bool same_ball(const Ball& a, const Ball& b) {
  return a.n == b.n && (a.center - b.center).norm() <= 1e-14 * std::max(1.0, a.center.norm()) &&
         std::abs(a.radius - b.radius) <= 1e-14 * a.radius;
}

}  // namespace

// ---------------------------------------------------------------------------
// SampledFunction

SampledFunction SampledFunction::indicator(const Ball& b) {
  SampledFunction f;
  f.kind_ = Kind::Indicator;
  f.support_ = b;
  return f;
}

SampledFunction SampledFunction::polynomial(ScaledPolynomial p) {
  SampledFunction f;
  f.kind_ = Kind::Polynomial;
  f.support_ = Ball(p.center(), p.radius(), p.dim());
  f.poly_ = std::move(p);
  return f;
}

SampledFunction SampledFunction::grid(GridSamples g) {
  check_dim(g.n);
  std::size_t cells = 1;
  for (int axis = 0; axis < g.n; ++axis) {
    if (g.count[static_cast<std::size_t>(axis)] < 1 || !(g.h[static_cast<std::size_t>(axis)] > 0.0)) {
      throw InvalidArgument("grid samples need a positive cell size and at least one cell");
    }
    cells *= static_cast<std::size_t>(g.count[static_cast<std::size_t>(axis)]);
  }
  if (g.n == 1) g.count[1] = 1;
  if (g.values.size() != cells) throw InvalidArgument("grid sample count does not match the grid");
  for (double v : g.values) {
    if (!std::isfinite(v)) throw InvalidArgument("grid samples must be finite");
  }
  SampledFunction f;
  f.kind_ = Kind::Grid;
  Point c = Point::Zero();
  double r2 = 0.0;
  for (int axis = 0; axis < g.n; ++axis) {
    c[axis] = 0.5 * (g.lower(axis) + g.upper(axis));
    r2 += std::pow(0.5 * (g.upper(axis) - g.lower(axis)), 2);
  }
  f.support_ = Ball(c, std::sqrt(r2), g.n);
  f.grid_ = std::move(g);
  return f;
}

SampledFunction SampledFunction::from_csv(const std::filesystem::path& path, int n) {
  check_dim(n);
  const auto rows = read_numeric_csv(path, static_cast<std::size_t>(n + 1));
  GridSamples g;
  g.n = n;
  for (int axis = 0; axis < n; ++axis) {
    std::vector<double> coords;
    for (const auto& r : rows) coords.push_back(r[static_cast<std::size_t>(axis)]);
    const auto ax = regular_axis(std::move(coords), "sampled function");
    g.h[static_cast<std::size_t>(axis)] = ax.step;
    g.origin[static_cast<std::size_t>(axis)] = ax.first - 0.5 * ax.step;
    g.count[static_cast<std::size_t>(axis)] = ax.count;
  }
  const std::size_t cells = static_cast<std::size_t>(g.count[0]) * static_cast<std::size_t>(n == 2 ? g.count[1] : 1);
  if (rows.size() != cells) throw InvalidArgument("sampled function does not fill its grid");
  g.values.assign(cells, 0.0);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::llround((r[0] - g.origin[0]) / g.h[0] - 0.5));
    const auto j = n == 2 ? static_cast<std::size_t>(std::llround((r[1] - g.origin[1]) / g.h[1] - 0.5)) : 0;
    g.values[j * static_cast<std::size_t>(g.count[0]) + i] = r[static_cast<std::size_t>(n)];
  }
  return grid(std::move(g));
}

double SampledFunction::operator()(const Point& y) const {
  double v = 0.0;
  switch (kind_) {
    case Kind::Indicator:
      v = support_.contains(y) ? 1.0 : 0.0;
      break;
    case Kind::Polynomial:
      v = support_.contains(y) ? (*poly_)(y) : 0.0;
      break;
    case Kind::Grid: {
      const auto& g = *grid_;
      std::size_t idx[2] = {0, 0};
      for (int axis = 0; axis < g.n; ++axis) {
        const auto a = static_cast<std::size_t>(axis);
        const double u = (y[axis] - g.origin[a]) / g.h[a];
        if (!(u >= 0.0) || u >= g.count[a]) return 0.0;
        idx[a] = std::min(static_cast<std::size_t>(u), static_cast<std::size_t>(g.count[a] - 1));
      }
      v = g.values[idx[1] * static_cast<std::size_t>(g.count[0]) + idx[0]];
      break;
    }
  }
  v *= factor_;
  return abs_ ? std::abs(v) : v;
}

SampledFunction SampledFunction::abs() const {
  SampledFunction f = *this;
  f.abs_ = true;
  return f;
}

SampledFunction SampledFunction::scaled(double c) const {
  if (!std::isfinite(c)) throw InvalidArgument("scale factor must be finite");
  SampledFunction f = *this;
  f.factor_ *= abs_ ? std::abs(c) : c;
  return f;
}

SampledFunction SampledFunction::combine(double a, const SampledFunction& f, double b,
                                         const SampledFunction& g) {
  if (f.kind_ != g.kind_ || f.abs_ || g.abs_ || !same_ball(f.support_, g.support_)) {
    throw InvalidArgument("combine needs signed functions of one kind on one support");
  }
  const double ca = a * f.factor_;
  const double cb = b * g.factor_;
  switch (f.kind_) {
    case Kind::Indicator:
      return indicator(f.support_).scaled(ca + cb);
    case Kind::Polynomial: {
      const auto& p = *f.poly_;
      const auto& q = *g.poly_;
      const int deg = std::max(p.degree(), q.degree());
      const auto basis = monomial_basis(p.dim(), deg);
      std::vector<double> c(basis.size(), 0.0);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        for (std::size_t i = 0; i < p.basis().size(); ++i) {
          if (p.basis()[i] == basis[k]) c[k] += ca * p.coeffs()[i];
        }
        for (std::size_t i = 0; i < q.basis().size(); ++i) {
          if (q.basis()[i] == basis[k]) c[k] += cb * q.coeffs()[i];
        }
      }
      return polynomial(ScaledPolynomial(p.dim(), deg, p.center(), p.radius(), std::move(c)));
    }
    case Kind::Grid: {
      const auto& p = *f.grid_;
      const auto& q = *g.grid_;
      if (p.count != q.count || p.h != q.h || p.origin != q.origin) {
        throw InvalidArgument("combine needs identical grids");
      }
      GridSamples out = p;
      for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = ca * p.values[i] + cb * q.values[i];
      return grid(std::move(out));
    }
  }
  throw InvalidArgument("unknown function kind");
}

std::vector<double> SampledFunction::breaks() const {
  std::vector<double> out;
  if (dim() != 1) return out;
  if (kind_ == Kind::Grid) {
    const auto& g = *grid_;
    for (int i = 0; i <= g.count[0]; ++i) out.push_back(g.origin[0] + g.h[0] * i);
  } else {
    out.push_back(support_.center[0] - support_.radius);
    out.push_back(support_.center[0] + support_.radius);
  }
  return out;
}

QuadratureRule SampledFunction::rule(std::span<const SingularFactor> singular,
                                     const QuadratureScheme& scheme) const {
  scheme.validate();
  if (dim() == 1 && kind_ == Kind::Grid) {
    const auto br = breaks();
    const double step = support_.radius / scheme.cells_per_radius(1);
    return interval_rule(br.front(), br.back(), step, singular, scheme, br);
  }
  return ball_rule(support_, singular, scheme);
}

// ---------------------------------------------------------------------------
// Kernel and potentials

ExponentProfile ExponentProfile::equal_split(int n, double alpha, int m) {
  if (m < 1) throw InvalidArgument("kernel needs at least one factor");
  ExponentProfile e;
  e.n = n;
  e.alpha = alpha;
  e.alphas.assign(static_cast<std::size_t>(m), (n - alpha) / m);
  e.validate();
  return e;
}

void ExponentProfile::validate() const {
  check_dim(n);
  if (!(alpha >= 0.0 && alpha < n)) throw InvalidArgument("alpha must lie in [0, n)");
  if (alphas.empty()) throw InvalidArgument("kernel needs at least one exponent");
  double sum = 0.0;
  for (double a : alphas) {
    if (!(a > 0.0 && std::isfinite(a))) throw InvalidArgument("kernel exponents must be positive");
    sum += a;
  }
  if (std::abs(sum - (n - alpha)) > 1e-12) {
    std::ostringstream os;
    os << "kernel exponents sum to " << sum << ", expected n - alpha = " << n - alpha;
    throw InvalidArgument(os.str());
  }
  if (!(m() > 1.0 - alpha / n)) throw InvalidArgument("alpha = 0 needs at least two kernel factors");
}

double kernel_eval(const Point& x, const Point& y, const ExponentProfile& e, const MatrixFamily& a) {
  double v = 1.0;
  for (int j = 0; j < e.m(); ++j) {
    const double d = (x - a.matrix(j) * y).head(e.n).norm();
    if (d < kKernelFloor) throw SingularKernel("kernel evaluated at a pole (x = A_j y)");
    v *= std::pow(d, -e.alphas[static_cast<std::size_t>(j)]);
  }
  return v;
}

std::vector<SingularFactor> kernel_singular_factors(const Point& x, const ExponentProfile& e,
                                                    const MatrixFamily& a) {
  std::vector<SingularFactor> out;
  for (int j = 0; j < e.m(); ++j) {
    out.push_back({Point(a.inverse(j) * x), RadialKind::Power, -e.alphas[static_cast<std::size_t>(j)]});
  }
  return out;
}

double apply_T(const SampledFunction& f, const Point& x, const ExponentProfile& e,
               const MatrixFamily& a, const QuadratureScheme& scheme) {
  e.validate();
  if (f.dim() != e.n || a.dim() != e.n) throw InvalidArgument("function, kernel and matrices must share n");
  if (a.size() != e.m()) throw InvalidArgument("need one kernel exponent per matrix");
  const auto factors = kernel_singular_factors(x, e, a);
  const auto pass = [&](const QuadratureScheme& q) {
    return f.rule(factors, q).integrate([&](const Point& y) {
      const double fy = f(y);
      return fy == 0.0 ? 0.0 : kernel_eval(x, y, e, a) * fy;
    });
  };
  if (scheme.policy == SingularityPolicy::AnalyticCell) return pass(scheme);

  QuadratureScheme q = scheme;
  double prev = pass(q);
  double change = kInfinity;
  for (int k = 0; k < scheme.max_refinements; ++k) {
    q = q.refined(2, e.n);
    const double cur = pass(q);
    change = std::abs(cur - prev);
    prev = cur;
    if (change <= scheme.tolerance * std::max(1.0, std::abs(cur))) return cur;
  }
  if (change > 8.0 * scheme.tolerance * std::max(1.0, std::abs(prev))) {
    std::ostringstream os;
    os << "refinement did not settle: last change " << change << " at resolution " << q.resolution;
    throw QuadratureDiverged(os.str());
  }
  return prev;
}

std::vector<double> apply_T_batch(const SampledFunction& f, std::span<const Point> xs,
                                  const ExponentProfile& e, const MatrixFamily& a,
                                  const QuadratureScheme& scheme, Exec exec) {
  return map_indices<double>(xs.size(), exec, [&](std::size_t i) { return apply_T(f, xs[i], e, a, scheme); });
}

double riesz_potential(const SampledFunction& f, const Point& x, double alpha,
                       const QuadratureScheme& scheme) {
  const int n = f.dim();
  if (!(alpha > 0.0 && alpha < n)) throw InvalidArgument("Riesz potential needs 0 < alpha < n");
  ExponentProfile e;
  e.n = n;
  e.alpha = alpha;
  e.alphas = {n - alpha};
  return apply_T(f, x, e, MatrixFamily::identity(n), scheme);
}

double domination_check(const SampledFunction& f, const Point& x, const ExponentProfile& e,
                        const MatrixFamily& a, const QuadratureScheme& scheme) {
  if (!(e.alpha > 0.0)) throw InvalidArgument("domination check needs 0 < alpha < n");
  const double num = std::abs(apply_T(f, x, e, a, scheme));
  const auto g = f.abs();
  double den = 0.0;
  for (int j = 0; j < a.size(); ++j) den += riesz_potential(g, Point(a.inverse(j) * x), e.alpha, scheme);
  if (num < 1e-14 && den < 1e-14) return 0.0;
  return num / den;
}

// ---------------------------------------------------------------------------
// Maximal operators

double MaximalPolicy::step(int n) const {
  const int base = cells_per_unit > 0 ? cells_per_unit : (n == 1 ? 512 : 64);
  return std::ldexp(1.0 / base, -std::max(0, refinements));
}

namespace {

// Integral of |f| over [u, v], free of interior breaks, by 8-point Gauss.
double abs_integral_piece(const SampledFunction& f, double u, double v) {
  if (!(v > u)) return 0.0;
  const auto& g = gauss_legendre(8);
  const double half = 0.5 * (v - u);
  const double mid = 0.5 * (u + v);
  double s = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::abs(f(Point(mid + half * g.x[i], 0.0)));
  return s * half;
}

MaximalValue maximal_1d(const SampledFunction& f, double x, double beta, const MaximalPolicy& policy) {
  const double h = policy.step(1);
  auto br = f.breaks();
  const double lo = br.front();
  const double hi = br.back();
  std::vector<double> pts;
  const auto k0 = static_cast<long>(std::ceil(lo / h - 1e-9));
  const auto k1 = static_cast<long>(std::floor(hi / h + 1e-9));
  for (long k = k0; k <= k1; ++k) pts.push_back(static_cast<double>(k) * h);
  for (double b : br) pts.push_back(b);
  if (const auto* p = f.profile()) {
    for (double u : p->roots_1d()) pts.push_back(p->center()[0] + p->radius() * u);
  }
  pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(), [&](double a, double b) { return b - a <= 1e-12 * h; }),
            pts.end());

  // Cumulative integral of |f| at every candidate point.
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double u = std::max(pts[i - 1], lo);
    const double v = std::min(pts[i], hi);
    cum[i] = cum[i - 1] + abs_integral_piece(f, u, v);
  }
  std::size_t ix = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (std::abs(pts[i] - x) < std::abs(pts[ix] - x)) ix = i;
  }

  MaximalValue best;
  best.witness = Ball(Point(x, 0.0), h, 1);
  for (std::size_t i = 0; i <= ix; ++i) {
    for (std::size_t j = ix; j < pts.size(); ++j) {
      if (j == i) continue;
      const double len = pts[j] - pts[i];
      const double mass = cum[j] - cum[i];
      if (mass <= 0.0) continue;
      const double v = beta == 0.0 ? mass / len : std::pow(len, beta - 1.0) * mass;
      if (v > best.value) {
        best.value = v;
        best.witness = Ball(Point(0.5 * (pts[i] + pts[j]), 0.0), 0.5 * len, 1);
      }
    }
  }
  return best;
}

// Area of the intersection of two disks.
double lens_area(double r1, double r2, double d) {
  if (d >= r1 + r2) return 0.0;
  const double rmin = std::min(r1, r2);
  if (d <= std::abs(r1 - r2)) return std::numbers::pi * rmin * rmin;
  const double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
  return r1 * r1 * (a1 - std::sin(2.0 * a1) / 2.0) + r2 * r2 * (a2 - std::sin(2.0 * a2) / 2.0);
}

MaximalValue maximal_2d(const SampledFunction& f, const Point& x, double beta, const MaximalPolicy& policy) {
  const Ball& s = f.support();
  const double delta = s.radius / 4.0 * std::ldexp(1.0, -std::max(0, policy.refinements));
  const int k = 4 << std::max(0, policy.refinements);
  QuadratureScheme q;
  q.resolution = 16;
  const auto g = f.abs();
  const auto mass = [&](const Ball& b) {
    if (f.kind() == SampledFunction::Kind::Indicator) {
      return std::abs(f.factor()) * lens_area(b.radius, s.radius, (b.center - s.center).norm());
    }
    if ((b.center - s.center).norm() >= b.radius + s.radius) return 0.0;
    return ball_rule(b, {}, q).integrate([&](const Point& y) { return g(y); });
  };
  std::vector<Point> centers{x, s.center};
  for (int i = -k; i <= k; ++i) {
    for (int j = -k; j <= k; ++j) {
      if (i != 0 || j != 0) centers.push_back(x + delta * Point(i, j));
    }
  }
  // Centres on the segment from x to the support centre.
  for (int i = 1; i < 2 * k; ++i) centers.push_back(x + (s.center - x) * (static_cast<double>(i) / (2 * k)));
  MaximalValue best;
  best.witness = Ball(x, delta, 2);
  for (const auto& c : centers) {
    const double dmin = (x - c).norm();
    std::vector<double> radii{dmin + (c - s.center).norm() + s.radius, dmin};
    for (int e = -16; e <= 8; ++e) {
      const double r = s.radius * std::pow(2.0, 0.5 * e);
      if (r >= dmin && r > 0.0) radii.push_back(r);
    }
    for (double r : radii) {
      if (!(r > 0.0)) continue;
      const Ball b(c, r, 2);
      const double m = mass(b);
      if (m <= 0.0) continue;
      const double v = std::pow(b.volume(), beta / 2.0 - 1.0) * m;
      if (v > best.value) {
        best.value = v;
        best.witness = b;
      }
    }
  }
  return best;
}

}  // namespace

MaximalValue hl_maximal(const SampledFunction& f, const Point& x, const MaximalPolicy& policy) {
  return f.dim() == 1 ? maximal_1d(f, x[0], 0.0, policy) : maximal_2d(f, x, 0.0, policy);
}

MaximalValue fractional_maximal(const SampledFunction& f, const Point& x, double beta,
                                const MaximalPolicy& policy) {
  if (!(beta > 0.0 && beta < f.dim())) throw InvalidArgument("fractional maximal order must lie in (0, n)");
  return f.dim() == 1 ? maximal_1d(f, x[0], beta, policy) : maximal_2d(f, x, beta, policy);
}

double mphi_maximal_lower(std::span<const SampledFunction> terms, std::span<const double> coeffs,
                          const Point& x, const QuadratureScheme& scheme, int k_min, int k_max) {
  if (terms.size() != coeffs.size()) throw InvalidArgument("one coefficient per term is required");
  if (terms.empty()) return 0.0;
  const int n = terms.front().dim();
  std::vector<QuadratureRule> rules;
  for (const auto& f : terms) rules.push_back(f.rule({}, scheme));
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * n);
  double best = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double t = std::ldexp(1.0, k);
    const double c = norm * std::pow(t, -n);
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& f = terms[i];
      sum += coeffs[i] * rules[i].integrate([&](const Point& y) {
        const double fy = f(y);
        return fy == 0.0 ? 0.0 : c * std::exp(-0.5 * (x - y).squaredNorm() / (t * t)) * fy;
      });
    }
    best = std::max(best, std::abs(sum));
  }
  return best;
}

double weighted_norm(const SampledFunction& f, double p, const WeightSpec& w, double s,
                     const QuadratureScheme& scheme) {
  if (!(p > 0.0)) throw InvalidArgument("norm exponent must be positive");
  if (f.dim() != w.dim()) throw InvalidArgument("function and weight dimensions differ");
  const auto factors = w.singular_factors(s);
  for (const auto& fac : factors) {
    if (!fac.locally_integrable(f.dim()) &&
        (fac.center - f.support().center).norm() <= f.support().radius) {
      throw NotIntegrable("w^s is not integrable on the support of f");
    }
  }
  const double integral = f.rule(factors, scheme).integrate([&](const Point& y) {
    const double fy = f(y);
    return fy == 0.0 ? 0.0 : std::pow(std::abs(fy), p) * w.pow_at(y, s);
  });
  return std::pow(integral, 1.0 / p);
}

}  // namespace rieszw
