#pragma once

#include "rieszw/core.hpp"
#include "rieszw/matrix.hpp"
#include "rieszw/parallel.hpp"
#include "rieszw/poly.hpp"
#include "rieszw/quadrature.hpp"
#include "rieszw/weights.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace rieszw {

// ---------------------------------------------------------------------------
// Sampled functions

/// Piecewise-constant samples: cell (i, j) covers
/// [origin + i h, origin + (i + 1) h) along each axis.
struct GridSamples {
  int n = 1;
  std::array<double, 2> origin{0.0, 0.0};
  std::array<double, 2> h{1.0, 1.0};
  std::array<int, 2> count{1, 1};
  std::vector<double> values;  // x-fastest

  double lower(int axis) const { return origin[static_cast<std::size_t>(axis)]; }
  double upper(int axis) const {
    return origin[static_cast<std::size_t>(axis)] +
           h[static_cast<std::size_t>(axis)] * count[static_cast<std::size_t>(axis)];
  }
};

/// A compactly supported function: an indicator of a ball, a polynomial
/// restricted to a ball, or grid samples. Values may carry a constant factor
/// and an absolute-value flag.
class SampledFunction {
 public:
  enum class Kind { Indicator, Polynomial, Grid };

  static SampledFunction indicator(const Ball& b);
  static SampledFunction polynomial(ScaledPolynomial p);
  static SampledFunction grid(GridSamples g);
  /// Rows "x[,y],value" at cell centres of a regular grid.
  static SampledFunction from_csv(const std::filesystem::path& path, int n);

  Kind kind() const { return kind_; }
  int dim() const { return support_.n; }
  /// A ball containing the support.
  const Ball& support() const { return support_; }
  double factor() const { return factor_; }
  bool absolute() const { return abs_; }
  const ScaledPolynomial* profile() const { return poly_ ? &*poly_ : nullptr; }
  const GridSamples* samples() const { return grid_ ? &*grid_ : nullptr; }

  double operator()(const Point& y) const;

  SampledFunction abs() const;
  SampledFunction scaled(double c) const;
  /// a f + b g for functions of the same kind on the same support.
  static SampledFunction combine(double a, const SampledFunction& f, double b,
                                 const SampledFunction& g);

  /// 1D discontinuities of the function (support ends and grid edges).
  std::vector<double> breaks() const;
  /// Product-integration rule over the support.
  QuadratureRule rule(std::span<const SingularFactor> singular, const QuadratureScheme& scheme) const;

 private:
  SampledFunction() = default;

  Kind kind_ = Kind::Indicator;
  Ball support_;
  double factor_ = 1.0;
  bool abs_ = false;
  std::optional<ScaledPolynomial> poly_;
  std::optional<GridSamples> grid_;
};

// ---------------------------------------------------------------------------
// Kernel and potentials

/// alpha in [0, n) and the kernel exponents alpha_1..alpha_m with
/// sum alpha_j = n - alpha.
struct ExponentProfile {
  int n = 1;
  double alpha = 0.0;
  std::vector<double> alphas;

  static ExponentProfile equal_split(int n, double alpha, int m);
  int m() const { return static_cast<int>(alphas.size()); }
  void validate() const;
};

/// prod_j |x - A_j y|^{-alpha_j}. Throws SingularKernel when some distance
/// falls below 1e-14.
double kernel_eval(const Point& x, const Point& y, const ExponentProfile& e, const MatrixFamily& a);

/// The points A_j^{-1} x where the kernel is singular in y, as radial factors.
std::vector<SingularFactor> kernel_singular_factors(const Point& x, const ExponentProfile& e,
                                                    const MatrixFamily& a);

/// T_{alpha,m} f(x). ExcludeAndRefine doubles the resolution until two passes
/// agree to the scheme tolerance; QuadratureDiverged when the last change
/// still exceeds eight times the tolerance.
double apply_T(const SampledFunction& f, const Point& x, const ExponentProfile& e,
               const MatrixFamily& a, const QuadratureScheme& scheme);

/// apply_T over a batch of points. Serial and parallel runs are bitwise equal.
std::vector<double> apply_T_batch(const SampledFunction& f, std::span<const Point> xs,
                                  const ExponentProfile& e, const MatrixFamily& a,
                                  const QuadratureScheme& scheme, Exec exec = Exec::Parallel);

/// I_alpha f(x), i.e. apply_T with m = 1, A = Id and alpha_1 = n - alpha.
double riesz_potential(const SampledFunction& f, const Point& x, double alpha,
                       const QuadratureScheme& scheme);

/// |T f(x)| / sum_j I_alpha(|f|)(A_j^{-1} x); 0 when both sides are below 1e-14.
double domination_check(const SampledFunction& f, const Point& x, const ExponentProfile& e,
                        const MatrixFamily& a, const QuadratureScheme& scheme);

// ---------------------------------------------------------------------------
// Maximal operators

struct MaximalPolicy {
  int cells_per_unit = 0;  // evaluation lattice; 0 picks 512 in 1D, 64 in 2D
  int refinements = 0;     // each one halves the lattice step

  double step(int n) const;
};

struct MaximalValue {
  double value = 0.0;
  Ball witness;  // maximising candidate ball
};

/// Uncentred Hardy-Littlewood maximal function over the candidate balls.
MaximalValue hl_maximal(const SampledFunction& f, const Point& x, const MaximalPolicy& policy = {});

/// sup over candidate balls B containing x of |B|^{beta/n - 1} int_B |f|.
MaximalValue fractional_maximal(const SampledFunction& f, const Point& x, double beta,
                                const MaximalPolicy& policy = {});

/// max over t = 2^k, k in [k_min, k_max], of |(phi_t * sum_i c_i f_i)(x)| with
/// the standard Gaussian phi. A lower bound for the grand maximal function.
double mphi_maximal_lower(std::span<const SampledFunction> terms, std::span<const double> coeffs,
                          const Point& x, const QuadratureScheme& scheme, int k_min = -6,
                          int k_max = 6);

/// (int |f|^p w^s)^{1/p} over the support of f.
double weighted_norm(const SampledFunction& f, double p, const WeightSpec& w, double s,
                     const QuadratureScheme& scheme);

}  // namespace rieszw
