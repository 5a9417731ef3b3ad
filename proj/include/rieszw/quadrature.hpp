#pragma once

#include "rieszw/core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace rieszw {

enum class SingularityPolicy {
  /// Integrate the singular radial factor exactly on cells next to the
  /// singular point, freezing the remaining integrand at the cell midpoint.
  AnalyticCell,
  /// Omit cells touching a singular point and refine until the result settles.
  ExcludeAndRefine,
};

struct QuadratureScheme {
  int resolution = 0;  // cells per ball radius; 0 selects the dimension default
  int gauss_points = 4;  // Gauss-Legendre nodes per regular cell; 1 is composite midpoint
  SingularityPolicy policy = SingularityPolicy::AnalyticCell;
  double tolerance = 1e-6;
  int max_refinements = 4;

  static constexpr int kDefaultResolution1D = 512;
  static constexpr int kDefaultResolution2D = 64;

  int cells_per_radius(int n) const {
    if (resolution > 0) return resolution;
    return n == 1 ? kDefaultResolution1D : kDefaultResolution2D;
  }
  QuadratureScheme refined(int factor, int n) const;
  void validate() const;
};

enum class RadialKind { Power, InverseLog };

/// A factor of an integrand that behaves like phi(|y - center|) near center:
/// Power is rho^exponent; InverseLog is log(1/rho)^exponent for rho < 1/e and
/// 1 beyond.
struct SingularFactor {
  Point center = Point::Zero();
  RadialKind kind = RadialKind::Power;
  double exponent = 0.0;

  double value(double rho) const;
  /// Exact value of the integral of rho^(n-1) phi(rho) over [ra, rb].
  double radial_moment(double ra, double rb, int n) const;
  bool locally_integrable(int n) const;
  /// True when the factor is worth integrating analytically.
  bool significant() const;
};

struct QuadNode {
  Point y;
  double weight;
};

struct QuadratureRule {
  std::vector<QuadNode> nodes;
  int excluded_cells = 0;

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (const auto& node : nodes) sum += node.weight * f(node.y);
    return sum;
  }
};

/// Drops insignificant factors and combines power factors sharing a centre.
std::vector<SingularFactor> merge_singular_factors(std::span<const SingularFactor> in);

/// Gauss-Legendre nodes and weights on [-1, 1] (1 <= k <= 16).
struct GaussTable {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussTable& gauss_legendre(int k);

/// Product-integration rule for the ball B. Nodes inside cells adjacent to a
/// singular factor carry weight (exact integral of that factor) / (factor at
/// node), so integrating the full integrand with the rule reproduces the
/// factor's singular behaviour exactly. extra_breaks lists 1D discontinuities
/// of the integrand that should fall on cell edges.
QuadratureRule ball_rule(const Ball& ball, std::span<const SingularFactor> singular,
                         const QuadratureScheme& scheme,
                         std::span<const double> extra_breaks = {});

/// Rule over a 1D interval [a, b] with the same singular handling.
QuadratureRule interval_rule(double a, double b, double step,
                             std::span<const SingularFactor> singular,
                             const QuadratureScheme& scheme,
                             std::span<const double> extra_breaks = {});

// ---------------------------------------------------------------------------
// Whole-space integration with an analytic power-law tail.

struct TailSpec {
  std::vector<std::size_t> near_nodes;
  std::vector<double> near_coeff;
  std::vector<std::size_t> far_nodes;
  std::vector<double> far_coeff;
  double rho_near = 0.0;
  double rho_far = 0.0;
  double cutoff = 0.0;  // tail integral runs over rho > cutoff
  int n = 1;
};

struct SpaceRule {
  int n = 1;
  std::vector<QuadNode> nodes;
  std::vector<TailSpec> tails;
};

struct SpaceIntegral {
  double body = 0.0;
  double tail = 0.0;
  bool tail_divergent = false;
  double total() const { return body + tail; }
};

struct SpaceLayout {
  int n = 1;
  /// 1D: points that must be cell edges (ball edges, singular points).
  std::vector<double> breaks;
  /// 1D: intervals meshed uniformly with fine_step; gaps are graded.
  std::vector<std::pair<double, double>> fine_intervals;
  /// 2D: polar origin and radius of the uniformly meshed disk.
  Point origin = Point::Zero();
  double fine_radius = 1.0;
  double fine_step = 0.01;
  double far_distance = 1e3;  // graded mesh extends this far past the outermost break
  double growth = 1.125;      // geometric ratio of graded cells
  int rays = 128;             // 2D only
};

SpaceRule whole_space_rule(const SpaceLayout& layout, std::span<const SingularFactor> singular,
                           const QuadratureScheme& scheme);

/// Integrates node values; the tails extrapolate the last two radial samples
/// as a power law C rho^gamma and integrate it analytically past the cutoff.
SpaceIntegral integrate_space(const SpaceRule& rule, std::span<const double> values);

}  // namespace rieszw
