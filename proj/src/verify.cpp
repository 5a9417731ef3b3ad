#include "rieszw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace rieszw {

namespace {

constexpr double kRatioFloor = 1e-14;

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// JSON has no infinity; non-finite values become strings.
nlohmann::json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

nlohmann::json jarr(const std::vector<double>& v) {
  auto out = nlohmann::json::array();
  for (double x : v) out.push_back(jnum(x));
  return out;
}

nlohmann::json jpoint(const Point& p, int n) { return std::vector<double>(p.data(), p.data() + n); }

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass:
      return "pass";
    case Status::Fail:
      return "fail";
    case Status::HypothesisFailed:
      return "hypothesis_failed";
    case Status::Skipped:
      return "skipped";
  }
  return "unknown";
}

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::Thm1:
      return "thm1";
    case Theorem::Ta:
      return "ta";
    case Theorem::Corollary:
      return "corollary";
  }
  return "unknown";
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["check_id"] = r.check_id;
  j["status"] = to_string(r.status);
  auto audits = nlohmann::json::array();
  for (const auto& a : r.audits) {
    audits.push_back({{"item", a.item}, {"value", jnum(a.value)}, {"detail", a.detail}, {"pass", a.pass}});
  }
  j["audits"] = audits;
  j["sample"] = r.sample;
  j["worst"] = jnum(r.worst);
  j["series"] = jarr(r.series);
  j["series_labels"] = r.series_labels;
  j["provenance"] = {{"seed", r.seed}, {"config_hash", r.config_hash}};
  j["details"] = r.details;
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double drift_of(const std::vector<double>& series) {
  if (series.empty()) return 1.0;
  double lo = kInfinity;
  double hi = 0.0;
  for (double v : series) {
    if (!std::isfinite(v) || !(v > 0.0)) return kInfinity;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi / lo;
}

double safe_ratio(double lhs, double rhs) {
  if (std::abs(lhs) < kRatioFloor && std::abs(rhs) < kRatioFloor) return 0.0;
  return lhs / rhs;
}

// ---------------------------------------------------------------------------
// Pointwise atom bound

std::vector<Point> outer_samples(const Ball& b, const MatrixFamily& a, int level) {
  if (level < 0) throw InvalidArgument("sample refinement level must be non-negative");
  std::vector<double> ts{1.25, 2.0, 4.0, 8.0};
  for (int l = 0; l < level; ++l) {
    std::vector<double> next;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      next.push_back(ts[i]);
      if (i + 1 < ts.size()) next.push_back(std::sqrt(ts[i] * ts[i + 1]));
    }
    ts = std::move(next);
  }
  std::vector<Point> dirs;
  if (b.n == 1) {
    dirs = {Point(1.0, 0.0), Point(-1.0, 0.0)};
  } else {
    const int count = 8 << level;
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * std::numbers::pi * k / count;
      dirs.emplace_back(std::cos(t), std::sin(t));
    }
  }
  const double reach = 2.0 * a.norm_bound() * b.radius;
  std::vector<Point> images;
  double spread = 0.0;
  for (int k = 0; k < a.size(); ++k) {
    images.push_back(a.matrix(k) * b.center);
    spread = std::max(spread, images.back().norm());
  }
  // Continue doubling until the samples reach past all images and the origin.
  for (double t = 2.0 * ts.back(); t * reach < 4.0 * spread; t *= 2.0) ts.push_back(t);
  std::vector<Point> out;
  const auto keep = [&](const Point& x) {
    if (classify(x, b, a).inside()) return;
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  };
  for (const auto& c : images) {
    for (double t : ts) {
      for (const auto& e : dirs) keep(c + t * reach * e);
    }
  }
  // The origin, where all A_j^{-1} x coincide, and the midpoints between images.
  keep(Point::Zero());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      if ((images[i] - images[j]).norm() > 0.0) keep(0.5 * (images[i] + images[j]));
    }
  }
  return out;
}

VerificationReport check_pointwise_atom_bound(const Atom& atom, const AtomParams& params,
                                              const ExponentProfile& e, const MatrixFamily& m,
                                              std::span<const Point> xs,
                                              const QuadratureScheme& scheme) {
  params.validate();
  e.validate();
  const Ball& b = atom.ball;
  const int n = b.n;
  const int d = params.d;
  const double w_ball = atom.w_ball > 0.0 ? atom.w_ball : weighted_measure(params.weight, 1.0, b, scheme);
  const double lead = std::pow(w_ball, -1.0 / params.p);
  const bool fractional = e.alpha > 0.0;
  const double beta = e.alpha * n / (n + d + 1);
  const double expo = static_cast<double>(n + d + 1) / n;
  const auto chi = SampledFunction::indicator(b);

  for (const auto& x : xs) {
    const auto lab = classify(x, b, m);
    if (lab.inside()) {
      throw MisclassifiedSample("sample point lies in " + lab.str() + " of the atom ball");
    }
  }

  struct Row {
    int k = 0;
    double lhs = 0.0, rhs_tm = 0.0, rhs_fm = 0.0;
  };
  const auto rows = map_indices<Row>(xs.size(), Exec::Parallel, [&](std::size_t i) {
    const Point& x = xs[i];
    Row r;
    r.k = classify(x, b, m).index;
    const double dist = (x - m.matrix(r.k) * b.center).norm();
    r.lhs = std::abs(apply_T(atom.profile, x, e, m, scheme));
    r.rhs_tm = lead * std::pow(b.radius, n + d + 1) * std::pow(dist, -n + e.alpha - d - 1);
    if (fractional) {
      const Point z = m.inverse(r.k) * x;
      r.rhs_fm = lead * std::pow(fractional_maximal(chi, z, beta).value, expo);
    }
    return r;
  });

  VerificationReport rep;
  rep.check_id = "pointwise_atom_bound";
  rep.sample = std::to_string(xs.size()) + " outer points";
  double c_tm = 0.0, c_fm = 0.0;
  double form_lo = kInfinity, form_hi = 0.0;
  std::vector<double> xcol, lhs, rtm, rfm, ktab;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    c_tm = std::max(c_tm, safe_ratio(r.lhs, r.rhs_tm));
    if (fractional) {
      c_fm = std::max(c_fm, safe_ratio(r.lhs, r.rhs_fm));
      const double f = safe_ratio(r.rhs_fm, r.rhs_tm);
      form_lo = std::min(form_lo, f);
      form_hi = std::max(form_hi, f);
    }
    xcol.push_back(xs[i][0]);
    lhs.push_back(r.lhs);
    rtm.push_back(r.rhs_tm);
    rfm.push_back(r.rhs_fm);
    ktab.push_back(r.k);
  }
  rep.worst = fractional ? std::max(c_tm, c_fm) : c_tm;
  rep.series = {c_tm};
  rep.series_labels = {"C_tmalpha"};
  if (fractional) {
    rep.series.push_back(c_fm);
    rep.series_labels.push_back("C_fractional");
  }
  rep.details["radius"] = b.radius;
  rep.details["center"] = jpoint(b.center, n);
  rep.details["w_ball"] = w_ball;
  rep.details["C_tmalpha"] = jnum(c_tm);
  rep.details["C_fractional"] = fractional ? jnum(c_fm) : nlohmann::json(nullptr);
  rep.details["form_ratio_min"] = fractional ? jnum(form_lo) : nlohmann::json(nullptr);
  rep.details["form_ratio_max"] = fractional ? jnum(form_hi) : nlohmann::json(nullptr);
  rep.details["witness"] = {{"x0", xcol}, {"region", ktab}, {"lhs", jarr(lhs)}, {"rhs_tmalpha", jarr(rtm)}};
  if (fractional) rep.details["witness"]["rhs_fractional"] = jarr(rfm);
  const bool finite = std::isfinite(c_tm) && (!fractional || std::isfinite(c_fm));
  rep.status = finite ? Status::Pass : Status::Fail;
  return rep;
}

VerificationReport pointwise_bound_study(const std::function<Atom(const Ball&)>& make_atom,
                                         const AtomParams& params, const Point& center,
                                         std::span<const double> radii, const ExponentProfile& e,
                                         const MatrixFamily& m, const QuadratureScheme& scheme,
                                         double drift, Exec exec) {
  if (radii.empty()) throw InvalidArgument("pointwise study needs at least one radius");
  const std::size_t nr = radii.size();
  // Index i < nr: base sample; i >= nr: refined sample.
  const auto reps = map_indices<VerificationReport>(2 * nr, exec, [&](std::size_t i) {
    const Ball b(center, radii[i % nr], params.dim());
    const auto atom = make_atom(b);
    const auto xs = outer_samples(b, m, i < nr ? 0 : 1);
    return check_pointwise_atom_bound(atom, params, e, m, xs, scheme);
  });
  const bool fractional = e.alpha > 0.0;
  VerificationReport out;
  out.check_id = "pointwise_atom_bound";
  out.sample = std::to_string(nr) + " radii, base and refined outer samples";
  std::vector<double> tm, fm;
  auto per = nlohmann::json::array();
  double form_lo = kInfinity, form_hi = 0.0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    tm.push_back(r.series[0]);
    out.series.push_back(r.series[0]);
    out.series_labels.push_back((i < nr ? "C_tmalpha r=" : "C_tmalpha refined r=") + num(radii[i % nr]));
    if (fractional) {
      fm.push_back(r.series[1]);
      form_lo = std::min(form_lo, r.details["form_ratio_min"].get<double>());
      form_hi = std::max(form_hi, r.details["form_ratio_max"].get<double>());
    }
    per.push_back(r.details);
  }
  if (fractional) {
    for (std::size_t i = 0; i < fm.size(); ++i) {
      out.series.push_back(fm[i]);
      out.series_labels.push_back((i < nr ? "C_fractional r=" : "C_fractional refined r=") + num(radii[i % nr]));
    }
  }
  const double d_tm = drift_of(tm);
  const double d_fm = fractional ? drift_of(fm) : 1.0;
  out.worst = *std::max_element(out.series.begin(), out.series.end());
  out.details["drift_tmalpha"] = jnum(d_tm);
  out.details["drift_fractional"] = fractional ? jnum(d_fm) : nlohmann::json(nullptr);
  out.details["drift_limit"] = drift;
  out.details["form_ratio_min"] = fractional ? jnum(form_lo) : nlohmann::json(nullptr);
  out.details["form_ratio_max"] = fractional ? jnum(form_hi) : nlohmann::json(nullptr);
  out.details["per_radius"] = per;
  bool ok = d_tm < drift && d_fm < drift;
  if (fractional) ok = ok && std::isfinite(form_hi) && form_lo > 0.0;
  out.status = ok ? Status::Pass : Status::Fail;
  return out;
}

// ---------------------------------------------------------------------------
// Geometric and weight lemmas

VerificationReport check_containment_step(const Ball& b, const MatrixFamily& a,
                                          std::span<const Point> xis, std::span<const Point> xs) {
  VerificationReport rep;
  rep.check_id = "containment_step";
  rep.sample = std::to_string(xis.size()) + " x " + std::to_string(xs.size()) + " pairs";
  double slack = kInfinity;
  Point wx = Point::Zero(), wxi = Point::Zero();
  for (const auto& x : xs) {
    const auto lab = classify(x, b, a);
    if (lab.inside()) throw MisclassifiedSample("sample point lies in " + lab.str());
    for (const auto& xi : xis) {
      if ((xi - b.center).norm() > b.radius * (1.0 + 1e-12)) throw InvalidArgument("xi must lie in the ball");
      for (int i = 0; i < a.size(); ++i) {
        const double f = (x - a.matrix(i) * xi).norm() / (x - a.matrix(i) * b.center).norm();
        if (f < slack) {
          slack = f;
          wx = x;
          wxi = xi;
        }
      }
    }
  }
  rep.worst = slack;
  rep.series = {slack};
  rep.series_labels = {"min |x - A_i xi| / |x - A_i x0|"};
  rep.details["min_factor"] = jnum(slack);
  rep.details["witness_x"] = jpoint(wx, b.n);
  rep.details["witness_xi"] = jpoint(wxi, b.n);
  rep.status = slack >= 0.5 * (1.0 - 1e-12) ? Status::Pass : Status::Fail;
  return rep;
}

VerificationReport check_rh_ball_inequality(const WeightSpec& w, double p, double alpha,
                                            const BallFamily& family, const QuadratureScheme& scheme,
                                            const EstimatorOptions& opts) {
  const int n = w.dim();
  if (!(alpha > 0.0 && alpha < n)) throw InvalidArgument("ball inequality needs 0 < alpha < n");
  if (!(p > 0.0 && p < n / alpha)) throw InvalidArgument("ball inequality needs 0 < p < n / alpha");
  const double q = 1.0 / (1.0 / p - alpha / n);
  VerificationReport rep;
  rep.check_id = "rh_ball_inequality";
  rep.sample = std::to_string(family.size()) + " balls";
  rep.details["q"] = q;
  const auto rh = estimate_RH_constant(w.pow(p), q / p, family, scheme, opts);
  rep.audits.push_back({"w^p in RH_{q/p}", rh.constant, rh.label + " " + to_string(rh.verdict), rh.finite()});
  if (!rh.finite()) {
    rep.status = Status::HypothesisFailed;
    rep.worst = kInfinity;
    return rep;
  }
  const double c = std::pow(rh.constant, 1.0 / p);
  const auto& balls = family.balls();
  const auto slack = map_indices<double>(balls.size(), opts.exec, [&](std::size_t i) {
    const auto& b = balls[i];
    const double lhs = std::pow(weighted_measure(w, p, b, scheme), -1.0 / p) *
                       std::pow(weighted_measure(w, q, b, scheme), 1.0 / q);
    const double rhs = c * std::pow(b.volume(), -alpha / n);
    return 1.0 - lhs / rhs;
  });
  std::size_t arg = 0;
  double top = slack[0];
  for (std::size_t i = 0; i < slack.size(); ++i) {
    if (slack[i] < slack[arg]) arg = i;
    top = std::max(top, slack[i]);
  }
  rep.worst = slack[arg];
  rep.series = {slack[arg]};
  rep.series_labels = {"min slack"};
  rep.details["rh_constant"] = rh.constant;
  rep.details["min_slack"] = slack[arg];
  rep.details["max_slack"] = top;
  rep.details["witness"] = {{"center", jpoint(balls[arg].center, n)}, {"radius", balls[arg].radius}};
  rep.status = slack[arg] >= -1e-9 ? Status::Pass : Status::Fail;
  return rep;
}

VerificationReport check_critical_index_lemmas(const WeightSpec& w, double p, double q,
                                               const BallFamily& family, const QuadratureScheme& scheme,
                                               double tol, const EstimatorOptions& opts) {
  if (!(p > 0.0)) throw InvalidArgument("index lemmas need p > 0");
  VerificationReport rep;
  rep.check_id = "critical_index_lemmas";
  rep.sample = std::to_string(family.size()) + " balls";
  const auto idx = [&](const WeightSpec& v) { return critical_indices(v, family, scheme, tol, 1024.0, opts); };
  const auto a1 = [&](const WeightSpec& v) { return estimate_A1_constant(v, family, scheme, opts); };
  const auto jidx = [](const CriticalIndices& c) {
    return nlohmann::json{{"r", jnum(c.r_w)}, {"r_lo", jnum(c.r_lo)}, {"r_hi", jnum(c.r_hi)}};
  };
  // a <= b in extended arithmetic, with the bisection tolerance as slack.
  const auto leq = [&](double a, double b) { return std::isinf(b) || a <= b + tol; };

  bool evaluated = false;
  bool ok = true;
  std::optional<CriticalIndices> iw, iwp;
  if (p < 1.0) {
    const auto h = a1(w.pow(1.0 / p));
    rep.audits.push_back({"w^{1/p} in A_1", h.constant, to_string(h.verdict), h.finite()});
    if (h.finite()) {
      iw = idx(w);
      iwp = idx(w.pow(p));
      const bool first = leq(p * iwp->r_lo, iw->r_hi);
      const bool second = leq(iw->r_lo, iwp->r_hi);
      rep.details["p r_{w^p} <= r_w"] = first;
      rep.details["r_w <= r_{w^p}"] = second;
      rep.series.push_back(p * iwp->r_w);
      rep.series.push_back(iw->r_w);
      rep.series.push_back(iwp->r_w);
      rep.series_labels.insert(rep.series_labels.end(), {"p r_{w^p}", "r_w", "r_{w^p}"});
      ok = ok && first && second;
      evaluated = true;
    } else {
      rep.details["lemma_p"] = "skipped: w^{1/p} not in A_1";
    }
  }
  if (q > p) {
    const auto h = a1(w.pow(q));
    rep.audits.push_back({"w^q in A_1", h.constant, to_string(h.verdict), h.finite()});
    if (h.finite()) {
      if (!iwp) iwp = idx(w.pow(p));
      const auto iwq = idx(w.pow(q));
      const bool third = leq(p * iwp->r_lo, q * iwq.r_hi);
      rep.details["p r_{w^p} <= q r_{w^q}"] = third;
      rep.details["w^q"] = jidx(iwq);
      rep.series.push_back(p * iwp->r_w);
      rep.series.push_back(q * iwq.r_w);
      rep.series_labels.insert(rep.series_labels.end(), {"p r_{w^p}", "q r_{w^q}"});
      ok = ok && third;
      evaluated = true;
    } else {
      rep.details["lemma_pq"] = "skipped: w^q not in A_1";
    }
  }
  if (iw) rep.details["w"] = jidx(*iw);
  if (iwp) rep.details["w^p"] = jidx(*iwp);
  rep.details["tol"] = tol;
  rep.worst = rep.series.empty() ? 0.0 : *std::max_element(rep.series.begin(), rep.series.end());
  rep.status = !evaluated ? Status::Skipped : (ok ? Status::Pass : Status::Fail);
  return rep;
}

// ---------------------------------------------------------------------------
// Whole-space layouts

namespace {

// Layout around a set of balls: 1D breaks at ball edges and extra points,
// fine mesh on the balls; 2D disk covering all balls.
SpaceLayout layout_for(const std::vector<Ball>& fine, std::vector<double> extra_breaks, double step,
                       double far) {
  SpaceLayout lay;
  lay.n = fine.front().n;
  lay.fine_step = step;
  lay.far_distance = far;
  if (lay.n == 1) {
    lay.breaks = std::move(extra_breaks);
    for (const auto& b : fine) {
      lay.breaks.push_back(b.center[0] - b.radius);
      lay.breaks.push_back(b.center[0] + b.radius);
      lay.fine_intervals.emplace_back(b.center[0] - b.radius, b.center[0] + b.radius);
    }
    // Merge overlapping fine intervals.
    auto& iv = lay.fine_intervals;
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& seg : iv) {
      if (!merged.empty() && seg.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, seg.second);
      } else {
        merged.push_back(seg);
      }
    }
    iv = std::move(merged);
  } else {
    Point c = Point::Zero();
    for (const auto& b : fine) c += b.center;
    c /= static_cast<double>(fine.size());
    double reach = 0.0;
    for (const auto& b : fine) reach = std::max(reach, (b.center - c).norm() + b.radius);
    lay.origin = c;
    lay.fine_radius = reach;
    lay.rays = 64;
  }
  return lay;
}

struct SpaceValue {
  double total = 0.0;
  double inner = 0.0;
  bool divergent = false;
};

template <class F, class Inside>
SpaceValue integrate_whole_space(const SpaceRule& rule, F&& integrand, Inside&& inside) {
  std::vector<double> vals(rule.nodes.size());
  SpaceValue out;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    vals[i] = integrand(rule.nodes[i].y);
    if (inside(rule.nodes[i].y)) out.inner += rule.nodes[i].weight * vals[i];
  }
  const auto r = integrate_space(rule, vals);
  out.total = r.total();
  out.divergent = r.tail_divergent || !std::isfinite(out.total);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Maximal inequalities

VerificationReport check_maximal_inequalities(const WeightSpec& w, const MaximalCheckSpec& spec,
                                              const QuadratureScheme& scheme, Exec exec) {
  const int n = w.dim();
  if (spec.tests.empty()) throw InvalidArgument("maximal check needs test functions");
  if (!(spec.p >= 1.0)) throw InvalidArgument("maximal check needs p >= 1");
  const bool fractional = spec.q > 0.0;
  if (fractional && std::abs(1.0 / spec.q - (1.0 / spec.p - spec.alpha / n)) > 1e-12) {
    throw InvalidArgument("maximal check needs 1/q = 1/p - alpha/n");
  }
  const double t = fractional ? spec.q : spec.p;     // outer exponent
  const double wpow = fractional ? spec.q : 1.0;     // weight power on the left
  const double fpow = fractional ? spec.p : 1.0;     // weight power on the right

  const auto ratio_for = [&](const Ball& b, int level) {
    const auto f = SampledFunction::indicator(b);
    MaximalPolicy pol = spec.policy;
    pol.refinements += level;
    std::vector<double> extra;
    for (const auto& c : w.singular_centers()) extra.push_back(c[0]);
    const double far = 1e3 * (b.center.norm() + b.radius);
    const auto lay = layout_for({b}, extra, b.radius / 16.0 * std::ldexp(1.0, -level), far);
    const auto rule = whole_space_rule(lay, w.singular_factors(wpow), scheme);
    const auto v = integrate_whole_space(
        rule,
        [&](const Point& x) {
          const double mf = fractional ? fractional_maximal(f, x, spec.alpha, pol).value : hl_maximal(f, x, pol).value;
          return std::pow(mf, t) * w.pow_at(x, wpow);
        },
        [](const Point&) { return false; });
    const double den = weighted_norm(f, spec.p, w, fpow, scheme);
    if (v.divergent) return kInfinity;
    return std::pow(v.total, 1.0 / t) / den;
  };

  std::vector<Ball> refined_tests;
  for (std::size_t i = 0; i < spec.tests.size(); ++i) {
    refined_tests.push_back(spec.tests[i]);
    if (i + 1 < spec.tests.size() && spec.tests[i].n == spec.tests[i + 1].n) {
      const auto& a = spec.tests[i];
      const auto& b = spec.tests[i + 1];
      refined_tests.emplace_back(0.5 * (a.center + b.center), 0.5 * (a.radius + b.radius), a.n);
    }
  }
  const auto base = map_indices<double>(spec.tests.size(), exec, [&](std::size_t i) { return ratio_for(spec.tests[i], 0); });
  const auto fine =
      map_indices<double>(refined_tests.size(), exec, [&](std::size_t i) { return ratio_for(refined_tests[i], 1); });
  const double sup0 = *std::max_element(base.begin(), base.end());
  const double sup1 = *std::max_element(fine.begin(), fine.end());

  VerificationReport rep;
  rep.check_id = fractional ? "fractional_maximal_inequality" : "maximal_inequality";
  rep.sample = std::to_string(spec.tests.size()) + " indicators, refined " + std::to_string(refined_tests.size());
  rep.worst = std::max(sup0, sup1);
  rep.series = {sup0, sup1};
  rep.series_labels = {"sup ratio", "sup ratio refined"};
  const double growth = std::isfinite(sup0) && sup0 > 0.0 ? sup1 / sup0 : kInfinity;
  const bool stable = std::isfinite(sup0) && std::isfinite(sup1) && growth < spec.drift && growth > 1.0 / spec.drift;
  rep.details["ratios"] = jarr(base);
  rep.details["ratios_refined"] = jarr(fine);
  rep.details["growth"] = jnum(growth);
  rep.details["verdict"] = to_string(stable ? Verdict::Finite : Verdict::Diverging);
  rep.details["p"] = spec.p;
  if (fractional) {
    rep.details["q"] = spec.q;
    rep.details["alpha"] = spec.alpha;
  }
  rep.status = stable ? Status::Pass : Status::Fail;
  return rep;
}

double quasi_norm_assembly(std::span<const double> lambdas, double q) {
  if (!(q > 0.0)) throw InvalidArgument("assembly exponent q must be positive");
  const double t = std::min(1.0, q);
  double s = 0.0;
  for (double l : lambdas) {
    if (!std::isfinite(l)) throw InvalidArgument("coefficients must be finite");
    s += std::pow(std::abs(l), t);
  }
  return std::pow(s, 1.0 / t);
}

VerificationReport check_quasi_norm_assembly(std::span<const double> lambdas, double q, double p) {
  if (!(p > 0.0 && p <= std::min(1.0, q))) throw InvalidArgument("assembly check needs 0 < p <= min(1, q)");
  const double lhs = quasi_norm_assembly(lambdas, q);
  double s = 0.0;
  for (double l : lambdas) s += std::pow(std::abs(l), p);
  const double rhs = std::pow(s, 1.0 / p);
  VerificationReport rep;
  rep.check_id = "quasi_norm_assembly";
  rep.sample = std::to_string(lambdas.size()) + " coefficients";
  rep.worst = safe_ratio(lhs, rhs);
  rep.series = {lhs, rhs};
  rep.series_labels = {"assembly", "l^p bound"};
  rep.status = lhs <= rhs * (1.0 + 1e-12) ? Status::Pass : Status::Fail;
  return rep;
}

// ---------------------------------------------------------------------------
// Theorem campaigns

namespace {

std::vector<Point> compatibility_sample(const WeightSpec& w, double h, double reach) {
  const auto sing = w.singular_centers();
  const auto usable = [&](const Point& x) {
    for (const auto& c : sing) {
      if ((x - c).norm() < 1e-9) return false;
    }
    return true;
  };
  std::vector<Point> out;
  const int k = static_cast<int>(std::ceil(reach / h));
  for (int i = -k; i < k; ++i) {
    if (w.dim() == 1) {
      const Point x((i + 0.5) * h, 0.0);
      if (usable(x)) out.push_back(x);
    } else {
      for (int j = -k; j < k; ++j) {
        const Point x((i + 0.5) * h, (j + 0.5) * h);
        if (usable(x)) out.push_back(x);
      }
    }
  }
  return out;
}

class AuditLog {
 public:
  explicit AuditLog(std::vector<Audit>& out) : out_(out) {}
  void require(const std::string& item, double value, const std::string& detail, bool pass) {
    out_.push_back({item, value, detail, pass});
    if (!pass) throw HypothesisFailed("audit '" + item + "' failed: " + detail);
  }

 private:
  std::vector<Audit>& out_;
};

struct AtomNorm {
  double total = 0.0;
  double inner = 0.0;
  double outer = 0.0;
  double refined = 0.0;
  double p0_norm = 0.0;
  bool divergent = false;
};

}  // namespace

VerificationReport run_theorem_campaign(const TheoremSpec& spec) {
  const auto& w = spec.w;
  const auto& e = spec.e;
  const auto& a = spec.a;
  const int n = w.dim();
  e.validate();
  if (e.n != n || a.dim() != n) throw InvalidArgument("weight, kernel and matrices must share n");
  if (a.size() != e.m()) throw InvalidArgument("need one kernel exponent per matrix");
  spec.scheme.validate();

  VerificationReport rep;
  rep.check_id = "theorem_" + to_string(spec.theorem);
  rep.seed = spec.campaign.seed;
  AuditLog audit(rep.audits);
  const auto family = [&](const WeightSpec& v) { return BallFamily::for_weight(v); };
  const double M = a.norm_bound();

  // Condition A: w(A_j x) <= C w(x), stable under a lattice refinement.
  {
    const double reach = 8.0 * std::max(1.0, M);
    const double c0 = check_matrix_compatibility(w, a, compatibility_sample(w, 0.25, reach));
    const double c1 = check_matrix_compatibility(w, a, compatibility_sample(w, 0.125, reach));
    audit.require("w(A_j x) <= C w(x)", c1, "sup ratio " + num(c0) + " -> " + num(c1) + " under refinement",
                  std::isfinite(c0) && std::isfinite(c1) && c1 <= spec.drift * c0);
  }

  AtomParams params{w, spec.p, spec.p0, spec.d};
  double t = spec.p;    // outer exponent of the target norm
  double wpow = 1.0;    // power of w in the target norm
  const double p = spec.p;

  if (spec.theorem == Theorem::Thm1) {
    audit.require("alpha = 0", e.alpha, "kernel order alpha", e.alpha == 0.0);
    audit.require("m >= 2", e.m(), "number of matrices", e.m() >= 2);
    const double cond = a.worst_difference_condition();
    audit.require("A_i - A_j invertible", cond, "worst difference condition number", cond <= a.condition_cap());
    audit.require("0 < p <= 1", p, "atom exponent", p > 0.0 && p <= 1.0);
    const auto idx = critical_indices(w, family(w), spec.scheme, spec.index_tol, 1024.0, spec.estimator);
    audit.require("w in A_infinity", idx.q_tilde, "critical index q~_w", !idx.q_unbounded);
    const auto range = admissible_params(idx, n, p);
    if (params.d < 0) params.d = range.d_min;
    if (!(params.p0 > 0.0)) params.p0 = std::max(2.0, 2.0 * range.p0_threshold);
    audit.require("d >= d_min", params.d, "d_min = " + std::to_string(range.d_min), params.d >= range.d_min);
    audit.require("p0 above threshold", params.p0, "threshold " + num(range.p0_threshold),
                  params.p0 > range.p0_threshold && std::isfinite(params.p0));
    const double order = p * (n + params.d + 1) / n;
    audit.require("w in A_{p(n+d+1)/n}", order, "needs p(n+d+1)/n > q~_w = " + num(idx.q_hi), order > idx.q_hi);
    rep.details["q_tilde"] = jnum(idx.q_tilde);
    rep.details["r_w"] = jnum(idx.r_w);
  } else {
    audit.require("0 < alpha < n", e.alpha, "kernel order alpha", e.alpha > 0.0 && e.alpha < n);
    if (spec.theorem == Theorem::Corollary) {
      audit.require("A = Id, m = 1", e.m(), "Riesz potential family", e.m() == 1 && a.is_identity_family());
    }
    const double s = spec.s > 0.0 ? spec.s : p;
    audit.require("0 < s < 1", s, "lower end of the p range", s > 0.0 && s < 1.0);
    audit.require("s <= p <= 1", p, "atom exponent", s <= p && p <= 1.0);
    const auto idx = critical_indices(w, family(w), spec.scheme, spec.index_tol, 1024.0, spec.estimator);
    const double rr = std::isinf(idx.r_w) ? 1.0 : (idx.r_lo > 1.0 ? idx.r_lo / (idx.r_lo - 1.0) : kInfinity);
    audit.require("r_w/(r_w-1) < n/alpha", rr, "n/alpha = " + num(n / e.alpha) + ", r_w in [" + num(idx.r_lo) +
                                                    ", " + num(idx.r_hi) + "]",
                  rr < n / e.alpha);
    const double lift = n / ((n - e.alpha) * s);
    const auto a1 = estimate_A1_constant(w.pow(lift), family(w), spec.scheme, spec.estimator);
    audit.require("w^{n/((n-alpha)s)} in A_1", a1.constant, "power " + num(lift) + ", " + to_string(a1.verdict),
                  a1.finite());
    const auto wp = w.pow(p);
    const auto idx_p = critical_indices(wp, family(wp), spec.scheme, spec.index_tol, 1024.0, spec.estimator);
    const auto range = admissible_params(idx_p, n, p);
    params.weight = wp;
    if (params.d < 0) params.d = std::max(range.d_min, static_cast<int>(std::floor(n * (1.0 / p - 1.0))));
    const double lower = std::max(range.p0_threshold, rr);
    const double upper = n / e.alpha;
    if (!(params.p0 > 0.0)) params.p0 = 0.5 * (lower + upper);
    audit.require("d >= d_min", params.d, "d_min = " + std::to_string(range.d_min), params.d >= range.d_min);
    audit.require("p0 in (max(1, r_w/(r_w-1)), n/alpha)", params.p0, "interval (" + num(lower) + ", " + num(upper) + ")",
                  params.p0 > lower && params.p0 < upper);
    t = 1.0 / (1.0 / p - e.alpha / n);
    wpow = t;
    rep.details["q"] = t;
    rep.details["r_w"] = jnum(idx.r_w);
    rep.details["r_w^p"] = jnum(idx_p.r_w);
  }
  params.validate();
  rep.details["theorem"] = to_string(spec.theorem);
  rep.details["p"] = p;
  rep.details["p0"] = params.p0;
  rep.details["d"] = params.d;
  rep.details["target_exponent"] = t;
  rep.details["weight_power"] = wpow;

  const auto atoms = sample_atom_campaign(params, spec.campaign, spec.scheme, spec.exec);
  for (const auto& at : atoms) {
    if (!validate_atom(at, params, spec.scheme).pass()) {
      throw InvalidArgument("campaign produced an atom that fails validation (seed " + std::to_string(at.seed) + ")");
    }
  }

  const auto eval_T = [&](const SampledFunction& f, const Point& x, const QuadratureScheme& q) {
    if (spec.theorem == Theorem::Corollary) return riesz_potential(f, x, e.alpha, q);
    return apply_T(f, x, e, a, q);
  };
  const auto weight_sing = w.singular_factors(wpow);

  const auto norms = map_indices<AtomNorm>(atoms.size(), spec.exec, [&](std::size_t i) {
    const auto& at = atoms[i];
    const Ball& b = at.ball;
    const auto expanded = expanded_balls(b, a);
    std::vector<double> extra{0.0};
    for (const auto& c : w.singular_centers()) extra.push_back(c[0]);
    for (int j = 0; j < a.size(); ++j) {
      extra.push_back((a.matrix(j) * b.center)[0] - a.norm(j) * b.radius);
      extra.push_back((a.matrix(j) * b.center)[0] + a.norm(j) * b.radius);
    }
    double reach = 0.0;
    for (const auto& eb : expanded) reach = std::max(reach, eb.center.norm() + eb.radius);
    const auto inside = [&](const Point& x) { return classify(x, b, a).inside(); };
    AtomNorm out;
    for (int level = 0; level < 2; ++level) {
      QuadratureScheme qt = spec.scheme;
      if (level == 1) qt = qt.refined(2, n);
      const double step = 4.0 * M * b.radius / spec.fine_cells * std::ldexp(1.0, -level);
      const auto lay = layout_for(expanded, extra, step, 256.0 * reach);
      const auto rule = whole_space_rule(lay, weight_sing, QuadratureScheme{});
      const auto v = integrate_whole_space(
          rule, [&](const Point& x) { return std::pow(std::abs(eval_T(at.profile, x, qt)), t) * w.pow_at(x, wpow); },
          inside);
      out.divergent = out.divergent || v.divergent;
      if (level == 0) {
        out.total = std::pow(v.total, 1.0 / t);
        out.inner = std::pow(v.inner, 1.0 / t);
        out.outer = std::pow(std::max(0.0, v.total - v.inner), 1.0 / t);
      } else {
        out.refined = std::pow(v.total, 1.0 / t);
      }
      if (level == 0 && spec.theorem == Theorem::Thm1) {
        const auto plain = whole_space_rule(lay, {}, QuadratureScheme{});
        const auto u = integrate_whole_space(
            plain, [&](const Point& x) { return std::pow(std::abs(eval_T(at.profile, x, qt)), params.p0); },
            [](const Point&) { return false; });
        out.p0_norm = u.divergent ? kInfinity : std::pow(u.total, 1.0 / params.p0);
      }
    }
    return out;
  });

  // Per-radius and per-centre maxima.
  const auto& radii = spec.campaign.radii;
  const auto& centers = spec.campaign.centers;
  std::vector<double> by_r(radii.size(), 0.0), by_r_ref(radii.size(), 0.0), by_c(centers.size(), 0.0);
  std::vector<double> col_r, col_total, col_inner, col_outer, col_ref, col_p0;
  auto col_c = nlohmann::json::array();
  bool divergent = false;
  double inner_max = 0.0, outer_max = 0.0, p0_max = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& r = norms[i];
    const std::size_t ri = i % radii.size();
    const std::size_t ci = (i / radii.size()) % centers.size();
    by_r[ri] = std::max(by_r[ri], r.total);
    by_r_ref[ri] = std::max(by_r_ref[ri], r.refined);
    by_c[ci] = std::max(by_c[ci], r.total);
    divergent = divergent || r.divergent;
    inner_max = std::max(inner_max, r.inner);
    outer_max = std::max(outer_max, r.outer);
    p0_max = std::max(p0_max, r.p0_norm);
    col_r.push_back(atoms[i].ball.radius);
    col_c.push_back(jpoint(atoms[i].ball.center, n));
    col_total.push_back(r.total);
    col_inner.push_back(r.inner);
    col_outer.push_back(r.outer);
    col_ref.push_back(r.refined);
    col_p0.push_back(r.p0_norm);
  }
  std::vector<double> scale_series;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (by_r[k] > 0.0) scale_series.push_back(by_r[k]);
  }
  std::vector<double> all = scale_series;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (by_r_ref[k] > 0.0) all.push_back(by_r_ref[k]);
  }
  for (std::size_t k = 0; k < radii.size(); ++k) {
    rep.series.push_back(by_r[k]);
    rep.series_labels.push_back("max norm r=" + num(radii[k]));
  }
  for (std::size_t k = 0; k < radii.size(); ++k) {
    rep.series.push_back(by_r_ref[k]);
    rep.series_labels.push_back("max norm refined r=" + num(radii[k]));
  }
  const double scale_drift = drift_of(scale_series);
  const double total_drift = drift_of(all);
  rep.worst = *std::max_element(col_total.begin(), col_total.end());
  rep.sample = std::to_string(atoms.size()) + " atoms over " + std::to_string(radii.size()) + " radii and " +
               std::to_string(centers.size()) + " centres";
  rep.details["scale_drift"] = jnum(scale_drift);
  rep.details["drift_with_refinement"] = jnum(total_drift);
  rep.details["drift_limit"] = spec.drift;
  rep.details["inner_max"] = jnum(inner_max);
  rep.details["outer_max"] = jnum(outer_max);
  rep.details["center_series"] = jarr(by_c);
  if (spec.theorem == Theorem::Thm1) rep.details["p0_norm_max"] = jnum(p0_max);
  rep.details["atoms"] = {{"radius", col_r}, {"center", col_c}, {"total", jarr(col_total)},
                          {"inner", jarr(col_inner)}, {"outer", jarr(col_outer)},
                          {"refined", jarr(col_ref)}};
  rep.details["region_ties"] = "smallest index";
  const bool ok = !divergent && std::isfinite(rep.worst) && total_drift < spec.drift &&
                  (spec.theorem != Theorem::Thm1 || std::isfinite(p0_max));
  rep.status = ok ? Status::Pass : Status::Fail;
  return rep;
}

}  // namespace rieszw
