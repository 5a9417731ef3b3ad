#include "rieszw/quadrature.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <limits>
#include <mutex>

namespace rieszw {

namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e

GaussTable build_gauss(int k) {
  // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
  // Legendre recurrence; weights come from the first eigenvector components.
  GaussTable t;
  if (k == 1) {
    t.x = {0.0};
    t.w = {2.0};
    return t;
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(k, k);
  for (int i = 1; i < k; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jac(i, i - 1) = b;
    jac(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  t.x.resize(static_cast<std::size_t>(k));
  t.w.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    t.x[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    t.w[static_cast<std::size_t>(i)] = 2.0 * v * v;
  }
  return t;
}

int nearest_factor_1d(double a, double b, std::span<const SingularFactor> singular,
                      double& dist) {
  int best = -1;
  dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < singular.size(); ++k) {
    if (!singular[k].significant()) continue;
    const double s = singular[k].center[0];
    const double d = s < a ? a - s : (s > b ? s - b : 0.0);
    if (d < dist) {
      dist = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

bool is_blowup(const SingularFactor& f) {
  return f.kind == RadialKind::InverseLog ? f.exponent > 0.0 : f.exponent < 0.0;
}

void emit_gauss_1d(double a, double b, const GaussTable& g, std::vector<QuadNode>& out) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    out.push_back({Point(mid + half * g.x[i], 0.0), half * g.w[i]});
  }
}

// One cell of a 1D mesh, product-integrated against the nearest singular
// factor when that factor sits within two cell widths.
void emit_cell_1d(double a, double b, std::span<const SingularFactor> singular,
                  const QuadratureScheme& scheme, const GaussTable& g,
                  std::vector<QuadNode>& out, int& excluded) {
  if (!(b > a)) return;
  double dist = 0.0;
  const int k = nearest_factor_1d(a, b, singular, dist);
  const double width = b - a;
  if (k >= 0 && dist <= 2.0 * width) {
    const auto& f = singular[static_cast<std::size_t>(k)];
    const double s = f.center[0];
    if (s > a && s < b) {
      emit_cell_1d(a, s, singular, scheme, g, out, excluded);
      emit_cell_1d(s, b, singular, scheme, g, out, excluded);
      return;
    }
    if (dist == 0.0 && scheme.policy == SingularityPolicy::ExcludeAndRefine && is_blowup(f)) {
      ++excluded;
      return;
    }
    const double ra = s <= a ? a - s : s - b;
    const double rb = s <= a ? b - s : s - a;
    const double mid = 0.5 * (a + b);
    const double phi = f.value(std::abs(mid - s));
    const double moment = f.radial_moment(ra, rb, 1);
    if (phi > 0.0 && std::isfinite(phi) && std::isfinite(moment)) {
      out.push_back({Point(mid, 0.0), moment / phi});
      return;
    }
  }
  emit_gauss_1d(a, b, g, out);
}

std::vector<double> sorted_breaks(double lo, double hi, std::span<const SingularFactor> singular,
                                  std::span<const double> extra) {
  std::vector<double> br{lo, hi};
  for (const auto& f : singular) {
    const double s = f.center[0];
    if (s > lo && s < hi) br.push_back(s);
  }
  for (double e : extra) {
    if (e > lo && e < hi) br.push_back(e);
  }
  std::sort(br.begin(), br.end());
  const double eps = 1e-14 * std::max(1.0, hi - lo);
  br.erase(std::unique(br.begin(), br.end(), [eps](double x, double y) { return y - x <= eps; }),
           br.end());
  br.back() = hi;
  return br;
}

void uniform_segment(double u, double v, double step, std::span<const SingularFactor> singular,
                     const QuadratureScheme& scheme, const GaussTable& g,
                     std::vector<QuadNode>& out, int& excluded) {
  const auto cells = std::max<long>(1, static_cast<long>(std::ceil((v - u) / step - 1e-9)));
  const double hc = (v - u) / static_cast<double>(cells);
  for (long i = 0; i < cells; ++i) {
    const double a = u + static_cast<double>(i) * hc;
    const double b = i + 1 == cells ? v : a + hc;
    emit_cell_1d(a, b, singular, scheme, g, out, excluded);
  }
}

// Edges of a geometrically graded mesh on [0, length] with first cell `step`.
std::vector<double> graded_offsets(double length, double step, double growth) {
  std::vector<double> off{0.0};
  double h = step;
  while (off.back() < length) {
    off.push_back(off.back() + h);
    h *= growth;
  }
  off.back() = length;
  if (off.size() > 2 && off[off.size() - 1] - off[off.size() - 2] < 0.25 * step) {
    off.erase(off.end() - 2);
  }
  return off;
}

}  // namespace

std::vector<SingularFactor> merge_singular_factors(std::span<const SingularFactor> in) {
  std::vector<SingularFactor> out;
  for (const auto& f : in) {
    if (!f.significant()) continue;
    bool merged = false;
    for (auto& o : out) {
      if (o.kind == RadialKind::Power && f.kind == RadialKind::Power &&
          (o.center - f.center).norm() <= 1e-14 * std::max(1.0, o.center.norm())) {
        o.exponent += f.exponent;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(f);
  }
  std::erase_if(out, [](const SingularFactor& f) { return !f.significant(); });
  std::stable_sort(out.begin(), out.end(), [](const SingularFactor& a, const SingularFactor& b) {
    return a.kind == RadialKind::Power && b.kind != RadialKind::Power;
  });
  return out;
}

const GaussTable& gauss_legendre(int k) {
  if (k < 1 || k > 16) throw InvalidArgument("Gauss-Legendre order must lie in [1, 16]");
  static std::array<GaussTable, 17> tables;
  static std::once_flag flag;
  std::call_once(flag, [] {
    for (int i = 1; i <= 16; ++i) tables[static_cast<std::size_t>(i)] = build_gauss(i);
  });
  return tables[static_cast<std::size_t>(k)];
}

QuadratureScheme QuadratureScheme::refined(int factor, int n) const {
  QuadratureScheme q = *this;
  q.resolution = cells_per_radius(n) * factor;
  return q;
}

void QuadratureScheme::validate() const {
  if (resolution != 0 && resolution < 16) throw InvalidArgument("quadrature resolution must be >= 16");
  if (!(tolerance > 0.0)) throw InvalidArgument("quadrature tolerance must be positive");
  if (gauss_points < 1 || gauss_points > 16) throw InvalidArgument("gauss_points must lie in [1, 16]");
  if (max_refinements < 0) throw InvalidArgument("max_refinements must be non-negative");
}

double SingularFactor::value(double rho) const {
  if (kind == RadialKind::Power) return std::pow(rho, exponent);
  if (rho >= kInvE) return 1.0;
  return std::pow(-std::log(rho), exponent);
}

double SingularFactor::radial_moment(double ra, double rb, int n) const {
  if (!(rb > ra)) return 0.0;
  if (kind == RadialKind::Power) {
    const double g = n + exponent;
    if (std::abs(g) < 1e-12) {
      if (ra <= 0.0) throw NotIntegrable("radial factor not integrable at its centre");
      return std::log(rb / ra);
    }
    if (g < 0.0 && ra <= 0.0) throw NotIntegrable("radial factor not integrable at its centre");
    return (std::pow(rb, g) - std::pow(ra, g)) / g;
  }
  // InverseLog: flat part beyond 1/e, incomplete-gamma part below.
  double total = 0.0;
  if (rb > kInvE) {
    const double lo = std::max(ra, kInvE);
    total += (std::pow(rb, n) - std::pow(lo, n)) / n;
  }
  if (ra < kInvE) {
    const double hi = std::min(rb, kInvE);
    const double a = exponent + 1.0;
    if (!(a > 0.0)) throw NotIntegrable("inverse-log factor exponent must exceed -1");
    const double scale = std::pow(static_cast<double>(n), -a);
    const double ub = -std::log(hi);
    const double g_hi = boost::math::tgamma(a, n * ub);
    const double g_lo = ra > 0.0 ? boost::math::tgamma(a, -n * std::log(ra)) : 0.0;
    total += scale * (g_hi - g_lo);
  }
  return total;
}

bool SingularFactor::locally_integrable(int n) const {
  if (kind == RadialKind::Power) return exponent > -static_cast<double>(n);
  return true;
}

bool SingularFactor::significant() const {
  return kind == RadialKind::Power ? exponent != 0.0 : exponent > 0.0;
}

QuadratureRule interval_rule(double a, double b, double step,
                             std::span<const SingularFactor> singular_in,
                             const QuadratureScheme& scheme, std::span<const double> extra_breaks) {
  const auto merged = merge_singular_factors(singular_in);
  const std::span<const SingularFactor> singular(merged);
  QuadratureRule rule;
  const auto& g = gauss_legendre(scheme.gauss_points);
  const auto br = sorted_breaks(a, b, singular, extra_breaks);
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    uniform_segment(br[i], br[i + 1], step, singular, scheme, g, rule.nodes, rule.excluded_cells);
  }
  return rule;
}

QuadratureRule ball_rule(const Ball& ball, std::span<const SingularFactor> singular_in,
                         const QuadratureScheme& scheme, std::span<const double> extra_breaks) {
  const auto merged = merge_singular_factors(singular_in);
  const std::span<const SingularFactor> singular(merged);
  const double h = ball.radius / scheme.cells_per_radius(ball.n);
  if (ball.n == 1) {
    const double c = ball.center[0];
    return interval_rule(c - ball.radius, c + ball.radius, h, singular, scheme, extra_breaks);
  }

  // 2D: the ball is split into the Voronoi cells of the singular points it
  // contains. Each piece is star-shaped about its singular point and is
  // meshed with rays from that point, which makes its factor exactly radial.
  QuadratureRule rule;
  const auto& g = gauss_legendre(scheme.gauss_points);
  std::vector<int> inside;
  for (std::size_t k = 0; k < singular.size(); ++k) {
    if ((singular[k].center - ball.center).norm() <= ball.radius * (1.0 + 1e-12)) {
      inside.push_back(static_cast<int>(k));
    }
  }
  const int rays = std::clamp(4 * scheme.cells_per_radius(2), 16, 512);
  const double dtheta = 2.0 * std::numbers::pi / rays;
  const bool exclude = scheme.policy == SingularityPolicy::ExcludeAndRefine;
  const std::size_t pieces = std::max<std::size_t>(1, inside.size());

  for (std::size_t piece = 0; piece < pieces; ++piece) {
    const int designated = inside.empty() ? -1 : inside[piece];
    const Point origin =
        designated >= 0 ? Point(singular[static_cast<std::size_t>(designated)].center) : ball.center;
    const Point d = origin - ball.center;
    for (int t = 0; t < rays; ++t) {
      const double theta = (t + 0.5) * dtheta;
      const Point u(std::cos(theta), std::sin(theta));
      const double du = d.dot(u);
      const double disc = du * du - (d.squaredNorm() - ball.radius * ball.radius);
      double len = -du + std::sqrt(std::max(0.0, disc));
      for (int other : inside) {
        if (other == designated) continue;
        const Point e = singular[static_cast<std::size_t>(other)].center - origin;
        const double ue = u.dot(e);
        if (ue > 0.0) len = std::min(len, 0.5 * e.squaredNorm() / ue);
      }
      if (!(len > 0.0)) continue;
      const auto cells = std::max<long>(2, static_cast<long>(std::ceil(len / h - 1e-9)));
      const double hc = len / static_cast<double>(cells);
      for (long i = 0; i < cells; ++i) {
        const double ra = static_cast<double>(i) * hc;
        const double rb = i + 1 == cells ? len : ra + hc;
        if (designated >= 0 && ra <= 2.0 * hc) {
          const auto& f = singular[static_cast<std::size_t>(designated)];
          if (i == 0 && exclude && is_blowup(f)) {
            ++rule.excluded_cells;
            continue;
          }
          const double rm = 0.5 * (ra + rb);
          const double phi = f.value(rm);
          const double moment = f.radial_moment(ra, rb, 2);
          if (phi > 0.0 && std::isfinite(phi) && std::isfinite(moment)) {
            rule.nodes.push_back({origin + rm * u, dtheta * moment / phi});
            continue;
          }
        }
        const double half = 0.5 * (rb - ra);
        const double mid = 0.5 * (ra + rb);
        for (std::size_t q = 0; q < g.x.size(); ++q) {
          const double rho = mid + half * g.x[q];
          rule.nodes.push_back({origin + rho * u, dtheta * rho * half * g.w[q]});
        }
      }
    }
  }
  return rule;
}

SpaceRule whole_space_rule(const SpaceLayout& layout, std::span<const SingularFactor> singular_in,
                           const QuadratureScheme& scheme) {
  check_dim(layout.n);
  const auto merged = merge_singular_factors(singular_in);
  const std::span<const SingularFactor> singular(merged);
  SpaceRule rule;
  rule.n = layout.n;
  const auto& g = gauss_legendre(scheme.gauss_points);
  int excluded = 0;

  if (layout.n == 1) {
    std::vector<double> br = layout.breaks;
    for (const auto& [a, b] : layout.fine_intervals) {
      br.push_back(a);
      br.push_back(b);
    }
    for (const auto& f : singular) br.push_back(f.center[0]);
    if (br.empty()) br.push_back(0.0);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(),
                         [](double x, double y) { return std::abs(y - x) <= 1e-13 * std::max(1.0, std::abs(x)); }),
             br.end());
    const double lo = br.front();
    const double hi = br.back();
    const double ref = 0.5 * (lo + hi);

    auto in_fine = [&](double x) {
      for (const auto& [a, b] : layout.fine_intervals) {
        if (x > a && x < b) return true;
      }
      return false;
    };

    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const double u = br[i];
      const double v = br[i + 1];
      if (in_fine(0.5 * (u + v))) {
        uniform_segment(u, v, layout.fine_step, singular, scheme, g, rule.nodes, excluded);
        continue;
      }
      const double mid = 0.5 * (u + v);
      const auto off = graded_offsets(mid - u, layout.fine_step, layout.growth);
      for (std::size_t k = 0; k + 1 < off.size(); ++k) {
        emit_cell_1d(u + off[k], u + off[k + 1], singular, scheme, g, rule.nodes, excluded);
      }
      for (std::size_t k = off.size() - 1; k > 0; --k) {
        emit_cell_1d(v - off[k], v - off[k - 1], singular, scheme, g, rule.nodes, excluded);
      }
    }

    // Tails: graded outward from the extreme breaks.
    const auto off = graded_offsets(layout.far_distance, layout.fine_step, layout.growth);
    for (int side : {-1, 1}) {
      const double edge = side < 0 ? lo : hi;
      std::size_t last_start = 0;
      std::size_t prev_start = 0;
      for (std::size_t k = 0; k + 1 < off.size(); ++k) {
        const double a = side < 0 ? edge - off[k + 1] : edge + off[k];
        const double b = side < 0 ? edge - off[k] : edge + off[k + 1];
        prev_start = last_start;
        last_start = rule.nodes.size();
        emit_cell_1d(a, b, singular, scheme, g, rule.nodes, excluded);
      }
      // Outermost node of each of the last two cells.
      auto outermost = [&](std::size_t from, std::size_t to) {
        std::size_t best = from;
        for (std::size_t j = from; j < to; ++j) {
          if (side * rule.nodes[j].y[0] > side * rule.nodes[best].y[0]) best = j;
        }
        return best;
      };
      TailSpec tail;
      tail.n = 1;
      const std::size_t near = outermost(prev_start, last_start);
      const std::size_t far = outermost(last_start, rule.nodes.size());
      tail.near_nodes = {near};
      tail.near_coeff = {1.0};
      tail.far_nodes = {far};
      tail.far_coeff = {1.0};
      tail.rho_near = std::abs(rule.nodes[near].y[0] - ref);
      tail.rho_far = std::abs(rule.nodes[far].y[0] - ref);
      tail.cutoff = std::abs(edge + side * layout.far_distance - ref);
      rule.tails.push_back(std::move(tail));
    }
    return rule;
  }

  // 2D polar mesh about layout.origin.
  std::vector<double> edges;
  {
    const auto cells = std::max<long>(2, static_cast<long>(std::ceil(layout.fine_radius / layout.fine_step)));
    const double h = layout.fine_radius / static_cast<double>(cells);
    for (long i = 0; i <= cells; ++i) edges.push_back(static_cast<double>(i) * h);
    const auto off = graded_offsets(layout.far_distance, h, layout.growth);
    for (std::size_t k = 1; k < off.size(); ++k) edges.push_back(layout.fine_radius + off[k]);
  }
  int designated = -1;
  for (std::size_t k = 0; k < singular.size(); ++k) {
    if (singular[k].significant() && (singular[k].center - layout.origin).norm() < 1e-14) {
      designated = static_cast<int>(k);
    }
  }
  const int rays = std::max(8, layout.rays);
  const double dtheta = 2.0 * std::numbers::pi / rays;
  TailSpec tail;
  tail.n = 2;
  const std::size_t ncell = edges.size() - 1;
  for (int t = 0; t < rays; ++t) {
    const double theta = (t + 0.5) * dtheta;
    const Point u(std::cos(theta), std::sin(theta));
    for (std::size_t i = 0; i < ncell; ++i) {
      const double ra = edges[i];
      const double rb = edges[i + 1];
      const double half = 0.5 * (rb - ra);
      const double mid = 0.5 * (ra + rb);
      if (designated >= 0 && i < 2) {
        const auto& f = singular[static_cast<std::size_t>(designated)];
        const double phi = f.value(mid);
        const double moment = f.radial_moment(ra, rb, 2);
        if (phi > 0.0 && std::isfinite(phi) && std::isfinite(moment)) {
          rule.nodes.push_back({layout.origin + mid * u, dtheta * moment / phi});
          continue;
        }
      }
      for (std::size_t q = 0; q < g.x.size(); ++q) {
        const double rho = mid + half * g.x[q];
        rule.nodes.push_back({layout.origin + rho * u, dtheta * rho * half * g.w[q]});
      }
      if (i + 2 == ncell) {
        tail.near_nodes.push_back(rule.nodes.size() - 1);
        tail.near_coeff.push_back(dtheta);
        tail.rho_near = mid + half * g.x.back();
      } else if (i + 1 == ncell) {
        tail.far_nodes.push_back(rule.nodes.size() - 1);
        tail.far_coeff.push_back(dtheta);
        tail.rho_far = mid + half * g.x.back();
      }
    }
  }
  tail.cutoff = edges.back();
  rule.tails.push_back(std::move(tail));
  return rule;
}

SpaceIntegral integrate_space(const SpaceRule& rule, std::span<const double> values) {
  if (values.size() != rule.nodes.size()) throw InvalidArgument("value count does not match rule");
  SpaceIntegral out;
  for (std::size_t i = 0; i < values.size(); ++i) out.body += rule.nodes[i].weight * values[i];
  for (const auto& t : rule.tails) {
    double g_near = 0.0;
    double g_far = 0.0;
    for (std::size_t j = 0; j < t.near_nodes.size(); ++j) g_near += t.near_coeff[j] * values[t.near_nodes[j]];
    for (std::size_t j = 0; j < t.far_nodes.size(); ++j) g_far += t.far_coeff[j] * values[t.far_nodes[j]];
    if (!(g_near > 0.0) || !(g_far > 0.0)) continue;
    const double gamma = std::log(g_far / g_near) / std::log(t.rho_far / t.rho_near);
    const double e = gamma + t.n;
    if (e >= -1e-9) {
      out.tail_divergent = true;
      out.tail = std::numeric_limits<double>::infinity();
      continue;
    }
    const double c = g_far / std::pow(t.rho_far, gamma);
    out.tail += c * std::pow(t.cutoff, e) / (-e);
  }
  return out;
}

}  // namespace rieszw
