#include "rieszw/weights.hpp"

#include "rieszw/io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace rieszw {

namespace {

constexpr double kInvE = 0.36787944117144233;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Tabulated weights

bool RegularGrid::contains(const Point& x) const {
  for (int axis = 0; axis < n; ++axis) {
    const double slack = 1e-12 * std::max(1.0, std::abs(spacing[axis]) * count[axis]);
    if (x[axis] < origin[axis] - slack || x[axis] > upper(axis) + slack) return false;
  }
  return true;
}

double TabulatedWeight::interpolate(const Point& x) const {
  if (!grid.contains(x)) {
    std::ostringstream os;
    os << "point (" << x[0];
    if (grid.n == 2) os << ", " << x[1];
    os << ") lies outside the tabulated grid";
    throw OutOfGrid(os.str());
  }
  int idx[2] = {0, 0};
  double frac[2] = {0.0, 0.0};
  for (int axis = 0; axis < grid.n; ++axis) {
    const double u = (x[axis] - grid.origin[axis]) / grid.spacing[axis];
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, grid.count[axis] - 2);
    idx[axis] = i;
    frac[axis] = std::clamp(u - i, 0.0, 1.0);
  }
  const auto at = [&](int i, int j) {
    return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.count[0]) +
                  static_cast<std::size_t>(i)];
  };
  if (grid.n == 1) return (1.0 - frac[0]) * at(idx[0], 0) + frac[0] * at(idx[0] + 1, 0);
  const double lo = (1.0 - frac[0]) * at(idx[0], idx[1]) + frac[0] * at(idx[0] + 1, idx[1]);
  const double hi = (1.0 - frac[0]) * at(idx[0], idx[1] + 1) + frac[0] * at(idx[0] + 1, idx[1] + 1);
  return (1.0 - frac[1]) * lo + frac[1] * hi;
}

TabulatedWeight load_tabulated_csv(const std::filesystem::path& path, int n) {
  check_dim(n);
  const auto rows = read_numeric_csv(path, static_cast<std::size_t>(n + 1));
  TabulatedWeight t;
  t.grid.n = n;
  for (int axis = 0; axis < n; ++axis) {
    std::vector<double> coords;
    for (const auto& r : rows) coords.push_back(r[static_cast<std::size_t>(axis)]);
    const auto ax = regular_axis(std::move(coords), "weight table");
    t.grid.origin[axis] = ax.first;
    t.grid.spacing[axis] = ax.step;
    t.grid.count[axis] = ax.count;
  }
  if (n == 1) t.grid.count[1] = 1;
  if (rows.size() != t.grid.size()) throw InvalidArgument("weight table does not fill its grid");
  t.values.assign(t.grid.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::llround((r[0] - t.grid.origin[0]) / t.grid.spacing[0]));
    const auto j = n == 2 ? static_cast<std::size_t>(std::llround((r[1] - t.grid.origin[1]) / t.grid.spacing[1]))
                          : 0;
    t.values[j * static_cast<std::size_t>(t.grid.count[0]) + i] = r[static_cast<std::size_t>(n)];
  }
  return t;
}

// ---------------------------------------------------------------------------
// WeightSpec

WeightSpec::WeightSpec(Kind kind, int n) : kind_(std::move(kind)), n_(n) {
  check_dim(n);
  std::visit(Overloaded{
                 [&](const PowerWeight& p) {
                   if (!std::isfinite(p.exponent)) throw InvalidArgument("power exponent must be finite");
                   if (!(p.exponent > -n)) {
                     throw InvalidArgument("power weight |x|^" + fmt(p.exponent) +
                                           " is not locally integrable in dimension " +
                                           std::to_string(n));
                   }
                 },
                 [](const LogExampleWeight&) {},
                 [&](const ProductPowerWeight& p) {
                   if (p.factors.empty()) throw InvalidArgument("product weight needs factors");
                   for (const auto& f : p.factors) {
                     if (!(f.exponent > -n)) {
                       throw InvalidArgument("product factor exponent " + fmt(f.exponent) +
                                             " is not locally integrable");
                     }
                   }
                 },
                 [&](const TabulatedWeight& t) {
                   if (t.grid.n != n) throw InvalidArgument("tabulated grid dimension mismatch");
                   for (int axis = 0; axis < n; ++axis) {
                     if (t.grid.count[axis] < 2 || !(t.grid.spacing[axis] > 0.0)) {
                       throw InvalidArgument("tabulated grid needs two or more nodes per axis");
                     }
                   }
                   if (t.values.size() != t.grid.size()) {
                     throw InvalidArgument("tabulated values do not match the grid size");
                   }
                   for (double v : t.values) {
                     if (!(std::isfinite(v) && v > 0.0)) {
                       throw InvalidArgument("tabulated weight values must be positive and finite");
                     }
                   }
                 },
             },
             kind_);
}

double WeightSpec::pow_at(const Point& x, double s) const {
  const double e = power_ * s;
  const double base = std::visit(
      Overloaded{
          [&](const PowerWeight& p) {
            if (p.exponent == 0.0) return 1.0;
            const double r = x.head(n_).norm();
            if (r == 0.0) throw SingularPoint("power weight is singular at the origin");
            return std::pow(r, p.exponent * e);
          },
          [&](const LogExampleWeight&) {
            const double r = x.head(n_).norm();
            if (r == 0.0) throw SingularPoint("log weight is singular at the origin");
            if (r >= kInvE) return 1.0;
            return std::pow(-std::log(r), e);
          },
          [&](const ProductPowerWeight& p) {
            double v = 1.0;
            for (const auto& f : p.factors) {
              if (f.exponent == 0.0) continue;
              const double r = (x - f.center).head(n_).norm();
              if (r == 0.0) throw SingularPoint("product weight is singular at a factor centre");
              v *= std::pow(r, f.exponent * e);
            }
            return v;
          },
          [&](const TabulatedWeight& t) { return std::pow(t.interpolate(x), e); },
      },
      kind_);
  return (scale_ == 1.0 ? 1.0 : std::pow(scale_, s)) * base;
}

WeightSpec WeightSpec::pow(double s) const {
  if (!std::isfinite(s)) throw InvalidArgument("weight power must be finite");
  WeightSpec out = *this;
  out.scale_ = std::pow(scale_, s);
  out.power_ = power_ * s;
  return out;
}

WeightSpec WeightSpec::scaled(double c) const {
  if (!(c > 0.0 && std::isfinite(c))) throw InvalidArgument("weight scale must be positive");
  WeightSpec out = *this;
  out.scale_ = scale_ * c;
  return out;
}

std::vector<SingularFactor> WeightSpec::singular_factors(double s) const {
  const double e = power_ * s;
  std::vector<SingularFactor> out;
  std::visit(Overloaded{
                 [&](const PowerWeight& p) {
                   if (p.exponent != 0.0 && e != 0.0) {
                     out.push_back({Point::Zero(), RadialKind::Power, p.exponent * e});
                   }
                 },
                 [&](const LogExampleWeight&) {
                   if (e != 0.0) out.push_back({Point::Zero(), RadialKind::InverseLog, e});
                 },
                 [&](const ProductPowerWeight& p) {
                   for (const auto& f : p.factors) {
                     if (f.exponent != 0.0 && e != 0.0) {
                       out.push_back({f.center, RadialKind::Power, f.exponent * e});
                     }
                   }
                 },
                 [](const TabulatedWeight&) {},
             },
             kind_);
  return out;
}

std::vector<Point> WeightSpec::singular_centers() const {
  std::vector<Point> out;
  for (const auto& f : singular_factors(1.0)) out.push_back(f.center);
  return out;
}

bool WeightSpec::locally_integrable(double s) const {
  for (const auto& f : singular_factors(s)) {
    if (!f.locally_integrable(n_)) return false;
  }
  return true;
}

std::string WeightSpec::describe() const {
  std::string base = std::visit(
      Overloaded{
          [](const PowerWeight& p) { return "|x|^" + fmt(p.exponent); },
          [](const LogExampleWeight&) { return std::string("log-example"); },
          [](const ProductPowerWeight& p) {
            std::string s;
            for (const auto& f : p.factors) {
              if (!s.empty()) s += "*";
              s += "|x-(" + fmt(f.center[0]) + "," + fmt(f.center[1]) + ")|^" + fmt(f.exponent);
            }
            return s;
          },
          [](const TabulatedWeight&) { return std::string("tabulated"); },
      },
      kind_);
  if (power_ != 1.0) base = "(" + base + ")^" + fmt(power_);
  if (scale_ != 1.0) base = fmt(scale_) + "*" + base;
  return base;
}

double eval_weight(const WeightSpec& w, const Point& x) { return w(x); }

namespace {

void require_integrable(const WeightSpec& w, double s, const Ball& ball) {
  for (const auto& f : w.singular_factors(s)) {
    if (f.locally_integrable(ball.n)) continue;
    if ((f.center - ball.center).head(ball.n).norm() <= ball.radius) {
      throw NotIntegrable("w^" + fmt(s) + " is not integrable near its singular point (" +
                          w.describe() + ")");
    }
  }
}

QuadratureRule rule_for(const WeightSpec& w, double s, const Ball& ball,
                        const QuadratureScheme& scheme) {
  require_integrable(w, s, ball);
  const auto factors = w.singular_factors(s);
  return ball_rule(ball, factors, scheme);
}

double average_pow(const WeightSpec& w, double s, const Ball& ball, const QuadratureScheme& scheme) {
  const auto rule = rule_for(w, s, ball, scheme);
  return rule.integrate([&](const Point& y) { return w.pow_at(y, s); }) / ball.volume();
}

// (avg_B w^s)^{1/s}, with w rescaled by its extreme node value so that large
// |s| does not overflow.
double power_mean(const WeightSpec& w, double s, const Ball& ball, const QuadratureScheme& scheme) {
  const auto rule = rule_for(w, s, ball, scheme);
  double c = s > 0.0 ? 0.0 : kInfinity;
  for (const auto& node : rule.nodes) c = s > 0.0 ? std::max(c, w(node.y)) : std::min(c, w(node.y));
  const double avg = rule.integrate([&](const Point& y) { return std::pow(w(y) / c, s); }) / ball.volume();
  return c * std::pow(avg, 1.0 / s);
}

double min_on_nodes(const WeightSpec& w, const Ball& ball, const QuadratureScheme& scheme) {
  const auto rule = rule_for(w, 1.0, ball, scheme);
  double m = kInfinity;
  for (const auto& node : rule.nodes) m = std::min(m, w(node.y));
  return m;
}

}  // namespace

double weighted_measure(const WeightSpec& w, double s, const Ball& ball,
                        const QuadratureScheme& scheme) {
  if (!(s > 0.0)) throw InvalidArgument("measure exponent must be positive");
  if (ball.n != w.dim()) throw InvalidArgument("ball and weight dimensions differ");
  scheme.validate();
  const auto rule = rule_for(w, s, ball, scheme);
  return rule.integrate([&](const Point& y) { return w.pow_at(y, s); });
}

// ---------------------------------------------------------------------------
// Ball families

BallFamilyPolicy BallFamilyPolicy::defaults(int n) {
  check_dim(n);
  BallFamilyPolicy p;
  p.n = n;
  if (n == 2) {
    p.half_width = 1;
    p.k_min = -4;
    p.k_max = 2;
  }
  return p;
}

BallFamily::BallFamily(std::vector<Ball> balls) : balls_(std::move(balls)) {
  if (balls_.empty()) throw InvalidArgument("ball family must be nonempty");
}

BallFamily BallFamily::dyadic(const BallFamilyPolicy& policy) {
  check_dim(policy.n);
  if (policy.k_max - policy.k_min < 3) {
    throw InvalidArgument("ball family radii must span at least four dyadic scales");
  }
  if (!(policy.spacing > 0.0) || policy.half_width < 0) {
    throw InvalidArgument("ball family lattice needs positive spacing");
  }
  std::vector<Point> centers;
  const int k = policy.half_width;
  for (int j = (policy.n == 2 ? -k : 0); j <= (policy.n == 2 ? k : 0); ++j) {
    for (int i = -k; i <= k; ++i) {
      centers.push_back(policy.lattice_origin + policy.spacing * Point(i, j));
    }
  }
  for (const auto& c : policy.extra_centers) {
    Point cc = c;
    if (policy.n == 1) cc[1] = 0.0;
    const bool dup = std::any_of(centers.begin(), centers.end(),
                                 [&](const Point& q) { return (q - cc).norm() < 1e-14; });
    if (!dup) centers.push_back(cc);
  }
  std::vector<Ball> balls;
  for (const auto& c : centers) {
    for (int e = policy.k_min; e <= policy.k_max; ++e) balls.emplace_back(c, std::ldexp(1.0, e), policy.n);
  }
  BallFamily out(std::move(balls));
  out.policy_ = policy;
  return out;
}

BallFamily BallFamily::for_weight(const WeightSpec& w) {
  auto policy = BallFamilyPolicy::defaults(w.dim());
  policy.extra_centers = w.singular_centers();
  return dyadic(policy);
}

BallFamily BallFamily::refined(int level) const {
  if (level <= 0) return *this;
  if (policy_) {
    auto p = *policy_;
    p.k_min -= level;
    return dyadic(p);
  }
  // Explicit list: halve the smallest ball at each distinct centre.
  std::vector<Ball> balls = balls_;
  std::vector<std::pair<Point, double>> smallest;
  for (const auto& b : balls_) {
    auto it = std::find_if(smallest.begin(), smallest.end(),
                           [&](const auto& e) { return (e.first - b.center).norm() < 1e-14; });
    if (it == smallest.end()) {
      smallest.emplace_back(b.center, b.radius);
    } else {
      it->second = std::min(it->second, b.radius);
    }
  }
  const int n = balls_.front().n;
  for (const auto& [c, r] : smallest) {
    for (int j = 1; j <= level; ++j) balls.emplace_back(c, std::ldexp(r, -j), n);
  }
  return BallFamily(std::move(balls));
}

// ---------------------------------------------------------------------------
// Estimators

std::string to_string(Verdict v) { return v == Verdict::Finite ? "finite" : "diverging"; }

namespace {

using BallFn = std::function<double(const Ball&, const QuadratureScheme&)>;

// Evaluates fn on the family at successive refinement levels and applies the
// growth rule. `powers` lists the exponents s for which w^s is integrated; a
// ball containing a non-integrable singular centre decides divergence at once.
WeightClassReport run_estimator(WeightClassReport report, const WeightSpec& w,
                                std::span<const double> powers, const BallFamily& family,
                                const QuadratureScheme& scheme, const EstimatorOptions& opts,
                                const BallFn& fn) {
  const int n = w.dim();
  if (family.balls().front().n != n) throw InvalidArgument("ball family dimension differs from weight");
  scheme.validate();
  report.ball_count = family.size();

  for (double s : powers) {
    for (const auto& f : w.singular_factors(s)) {
      if (f.locally_integrable(n)) continue;
      for (const auto& b : family.balls()) {
        if ((f.center - b.center).head(n).norm() <= b.radius) {
          report.constant = kInfinity;
          report.series = {kInfinity};
          report.verdict = Verdict::Diverging;
          report.witness = b;
          report.reason = "w^" + fmt(s) + " is not locally integrable at a point of the family";
          return report;
        }
      }
    }
  }

  const int factor = opts.refine_factor > 0 ? opts.refine_factor : (n == 1 ? 4 : 2);
  const int base = scheme.resolution > 0
                       ? scheme.resolution
                       : (opts.base_resolution > 0 ? opts.base_resolution : (n == 1 ? 32 : 16));
  const int levels = std::max(1, opts.levels);
  for (int level = 0; level < levels; ++level) {
    const BallFamily fam = family.refined(level);
    QuadratureScheme q = scheme;
    q.resolution = base;
    for (int j = 0; j < level; ++j) q.resolution *= factor;
    const auto values = map_indices<double>(fam.size(), opts.exec,
                                            [&](std::size_t i) { return fn(fam.balls()[i], q); });
    std::size_t arg = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[arg]) arg = i;
    }
    report.series.push_back(values[arg]);
    report.witness = fam.balls()[arg];
  }
  report.constant = *std::max_element(report.series.begin(), report.series.end());
  bool monotone = report.series.size() >= 4;
  for (std::size_t j = 1; j < report.series.size(); ++j) {
    if (report.series[j] < report.series[j - 1] * (1.0 - 1e-12)) monotone = false;
  }
  if (monotone && report.series.back() >= opts.growth_threshold * report.series.front()) {
    report.verdict = Verdict::Diverging;
    report.reason = "constant grows by " + fmt(report.series.back() / report.series.front()) +
                    " across refinements";
  } else {
    report.verdict = Verdict::Finite;
  }
  return report;
}

}  // namespace

WeightClassReport estimate_A1_constant(const WeightSpec& w, const BallFamily& family,
                                       const QuadratureScheme& scheme,
                                       const EstimatorOptions& opts) {
  WeightClassReport r;
  r.cls = WeightClass::A1;
  r.label = "A_1";
  r.p = 1.0;
  const double powers[] = {1.0};
  return run_estimator(r, w, powers, family, scheme, opts,
                       [&](const Ball& b, const QuadratureScheme& q) {
                         return average_pow(w, 1.0, b, q) / min_on_nodes(w, b, q);
                       });
}

WeightClassReport estimate_Ap_constant(const WeightSpec& w, double p, const BallFamily& family,
                                       const QuadratureScheme& scheme,
                                       const EstimatorOptions& opts) {
  if (!(p > 1.0)) throw InvalidArgument("A_p estimate needs p > 1");
  WeightClassReport r;
  r.cls = WeightClass::Ap;
  r.label = "A_p(" + fmt(p) + ")";
  r.p = p;
  const double dual = -1.0 / (p - 1.0);
  const double powers[] = {1.0, dual};
  return run_estimator(r, w, powers, family, scheme, opts,
                       [&](const Ball& b, const QuadratureScheme& q) {
                         return average_pow(w, 1.0, b, q) / power_mean(w, dual, b, q);
                       });
}

WeightClassReport estimate_Apq_constant(const WeightSpec& w, double p, double q_exp,
                                        const BallFamily& family, const QuadratureScheme& scheme,
                                        const EstimatorOptions& opts) {
  if (!(p >= 1.0) || !(q_exp >= p)) throw InvalidArgument("A_{p,q} estimate needs q >= p >= 1");
  WeightClassReport r;
  r.cls = WeightClass::Apq;
  r.label = "A_{p,q}(" + fmt(p) + "," + fmt(q_exp) + ")";
  r.p = p;
  r.q = q_exp;
  if (p == 1.0) {
    const double powers[] = {q_exp, 1.0};
    return run_estimator(r, w, powers, family, scheme, opts,
                         [&](const Ball& b, const QuadratureScheme& q) {
                           return power_mean(w, q_exp, b, q) / min_on_nodes(w, b, q);
                         });
  }
  const double pp = p / (p - 1.0);
  const double powers[] = {q_exp, -pp};
  return run_estimator(r, w, powers, family, scheme, opts,
                       [&](const Ball& b, const QuadratureScheme& q) {
                         return power_mean(w, q_exp, b, q) / power_mean(w, -pp, b, q);
                       });
}

WeightClassReport estimate_RH_constant(const WeightSpec& w, double s, const BallFamily& family,
                                       const QuadratureScheme& scheme,
                                       const EstimatorOptions& opts) {
  if (!(s > 1.0)) throw InvalidArgument("reverse Hoelder estimate needs s > 1");
  WeightClassReport r;
  r.cls = WeightClass::RH;
  r.label = "RH_s(" + fmt(s) + ")";
  r.s = s;
  const double powers[] = {s, 1.0};
  return run_estimator(r, w, powers, family, scheme, opts,
                       [&](const Ball& b, const QuadratureScheme& q) {
                         return power_mean(w, s, b, q) / average_pow(w, 1.0, b, q);
                       });
}

CriticalIndices critical_indices(const WeightSpec& w, const BallFamily& family,
                                 const QuadratureScheme& scheme, double tol, double cap,
                                 const EstimatorOptions& opts) {
  if (!(tol > 0.0)) throw InvalidArgument("bisection tolerance must be positive");
  if (!(cap > 1.0 + tol)) throw InvalidArgument("index cap must exceed 1 + tol");
  CriticalIndices out;
  out.tol = tol;
  out.cap = cap;

  const auto in_ap = [&](double p) {
    return estimate_Ap_constant(w, p, family, scheme, opts).finite();
  };
  const auto in_rh = [&](double s) {
    return estimate_RH_constant(w, s, family, scheme, opts).finite();
  };

  if (estimate_A1_constant(w, family, scheme, opts).finite()) {
    out.q_tilde = out.q_lo = out.q_hi = 1.0;
  } else if (!in_ap(cap)) {
    out.q_unbounded = true;
    out.q_tilde = kInfinity;
    out.q_lo = cap;
    out.q_hi = kInfinity;
  } else {
    double lo = 1.0;
    double hi = cap;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (in_ap(mid) ? hi : lo) = mid;
    }
    out.q_lo = lo;
    out.q_hi = hi;
    out.q_tilde = 0.5 * (lo + hi);
  }

  if (in_rh(cap)) {
    out.r_w = kInfinity;
    out.r_lo = cap;
    out.r_hi = kInfinity;
  } else {
    double lo = 1.0;
    double hi = cap;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (in_rh(mid) ? lo : hi) = mid;
    }
    out.r_lo = lo;
    out.r_hi = hi;
    out.r_w = 0.5 * (lo + hi);
  }
  return out;
}

double check_matrix_compatibility(const WeightSpec& w, const MatrixFamily& a,
                                  std::span<const Point> sample) {
  if (a.dim() != w.dim()) throw InvalidArgument("matrix family and weight dimensions differ");
  double worst = 0.0;
  for (const auto& x : sample) {
    const double wx = w(x);
    for (int j = 0; j < a.size(); ++j) worst = std::max(worst, w(a.matrix(j) * x) / wx);
  }
  return worst;
}

DoublingReport doubling_check(const WeightSpec& w, double p, double lambda,
                              const BallFamily& family, const QuadratureScheme& scheme,
                              const EstimatorOptions& opts) {
  if (!(lambda > 1.0)) throw InvalidArgument("doubling factor must exceed 1");
  if (!(p >= 1.0)) throw InvalidArgument("doubling check needs p >= 1");
  const auto cls = p == 1.0 ? estimate_A1_constant(w, family, scheme, opts)
                            : estimate_Ap_constant(w, p, family, scheme, opts);
  if (!cls.finite()) {
    throw HypothesisFailed("weight is not in " + cls.label + "; doubling bound does not apply");
  }
  DoublingReport out;
  out.p = p;
  out.lambda = lambda;
  out.class_constant = cls.constant;
  const auto& balls = family.balls();
  const auto ratios = map_indices<double>(balls.size(), opts.exec, [&](std::size_t i) {
    return weighted_measure(w, 1.0, balls[i].dilated(lambda), scheme) /
           weighted_measure(w, 1.0, balls[i], scheme);
  });
  const double bound = std::pow(lambda, w.dim() * p) * cls.constant;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] > ratios[arg]) arg = i;
  }
  out.worst_ratio = ratios[arg];
  out.worst_normalized = ratios[arg] / bound;
  out.witness = balls[arg];
  out.pass = out.worst_normalized <= 1.0 + 1e-9;
  return out;
}

}  // namespace rieszw
