#pragma once

#include "rieszw/core.hpp"
#include "rieszw/matrix.hpp"
#include "rieszw/parallel.hpp"
#include "rieszw/quadrature.hpp"

#include <array>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rieszw {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Weight specifications

struct PowerWeight {
  double exponent = 0.0;  // |x|^exponent
};

/// log(1/|x|) for |x| < 1/e and 1 elsewhere.
struct LogExampleWeight {};

struct PowerFactor {
  double exponent = 0.0;
  Point center = Point::Zero();
};

/// prod_k |x - c_k|^{a_k}
struct ProductPowerWeight {
  std::vector<PowerFactor> factors;
};

/// Vertex grid; values are interpolated multilinearly between vertices.
struct RegularGrid {
  int n = 1;
  std::array<double, 2> origin{0.0, 0.0};
  std::array<double, 2> spacing{1.0, 1.0};
  std::array<int, 2> count{2, 1};

  std::size_t size() const {
    return static_cast<std::size_t>(count[0]) * static_cast<std::size_t>(n == 2 ? count[1] : 1);
  }
  bool contains(const Point& x) const;
  double upper(int axis) const { return origin[axis] + spacing[axis] * (count[axis] - 1); }
};

struct TabulatedWeight {
  RegularGrid grid;
  std::vector<double> values;  // x-fastest ordering

  double interpolate(const Point& x) const;
};

/// w(x) = scale * base(x)^power, where base is one of the variants.
class WeightSpec {
 public:
  using Kind = std::variant<PowerWeight, LogExampleWeight, ProductPowerWeight, TabulatedWeight>;

  WeightSpec(Kind kind, int n);

  static WeightSpec constant(int n) { return power_weight(n, 0.0); }
  static WeightSpec power_weight(int n, double a) { return WeightSpec(PowerWeight{a}, n); }
  static WeightSpec log_example(int n) { return WeightSpec(LogExampleWeight{}, n); }

  int dim() const { return n_; }
  const Kind& kind() const { return kind_; }
  double scale() const { return scale_; }
  double power() const { return power_; }

  /// w(x). Throws SingularPoint at a pole or zero, OutOfGrid off a table.
  double operator()(const Point& x) const { return pow_at(x, 1.0); }
  /// w(x)^s, evaluated without forming w(x) first where possible.
  double pow_at(const Point& x, double s) const;

  /// The weight w^s. Local integrability is checked where it is integrated.
  WeightSpec pow(double s) const;
  WeightSpec scaled(double c) const;

  /// Singular radial factors of w^s, used to place product-integration cells.
  std::vector<SingularFactor> singular_factors(double s = 1.0) const;
  std::vector<Point> singular_centers() const;
  /// True when w^s is locally integrable near every singular centre.
  bool locally_integrable(double s = 1.0) const;

  std::string describe() const;

 private:
  Kind kind_;
  int n_;
  double scale_ = 1.0;
  double power_ = 1.0;
};

double eval_weight(const WeightSpec& w, const Point& x);

/// Reads rows "x[,y],value" into a tabulated weight on a regular grid.
TabulatedWeight load_tabulated_csv(const std::filesystem::path& path, int n);

/// Integral of w^s over B. Throws NotIntegrable when a singular centre of w^s
/// in the closed ball is not locally integrable.
double weighted_measure(const WeightSpec& w, double s, const Ball& ball,
                        const QuadratureScheme& scheme);

// ---------------------------------------------------------------------------
// Ball families

struct BallFamilyPolicy {
  int n = 1;
  Point lattice_origin = Point::Zero();
  double spacing = 0.5;
  int half_width = 4;  // centres at origin + spacing * k, |k_i| <= half_width
  int k_min = -8;      // radii 2^k, k in [k_min, k_max]
  int k_max = 4;
  std::vector<Point> extra_centers;

  static BallFamilyPolicy defaults(int n);
};

class BallFamily {
 public:
  /// Explicit list; must be nonempty.
  explicit BallFamily(std::vector<Ball> balls);
  /// Lattice of centres (plus the extra centres) times dyadic radii. Requires
  /// at least four dyadic scales.
  static BallFamily dyadic(const BallFamilyPolicy& policy);
  /// The default family for w: its singular centres join the lattice.
  static BallFamily for_weight(const WeightSpec& w);

  /// Adds `level` smaller dyadic radii at every centre.
  BallFamily refined(int level) const;

  const std::vector<Ball>& balls() const { return balls_; }
  std::size_t size() const { return balls_.size(); }
  const std::optional<BallFamilyPolicy>& policy() const { return policy_; }

 private:
  std::vector<Ball> balls_;
  std::optional<BallFamilyPolicy> policy_;
};

// ---------------------------------------------------------------------------
// Class constants

enum class WeightClass { A1, Ap, Apq, RH };
enum class Verdict { Finite, Diverging };

std::string to_string(Verdict v);

struct WeightClassReport {
  WeightClass cls = WeightClass::Ap;
  std::string label;
  double p = 0.0;
  double q = 0.0;
  double s = 0.0;
  double constant = 0.0;        // max over refinement levels
  std::vector<double> series;   // sup over the family at each level
  Verdict verdict = Verdict::Finite;
  Ball witness;                 // ball attaining the sup at the last level
  std::size_t ball_count = 0;   // balls in the base family
  std::string reason;

  bool finite() const { return verdict == Verdict::Finite; }
};

struct EstimatorOptions {
  int levels = 4;           // base family plus three refinements
  int refine_factor = 0;    // resolution multiplier per level; 0 picks 4 in 1D, 2 in 2D
  double growth_threshold = 4.0;
  int base_resolution = 0;  // 0 picks 32 cells per radius in 1D, 16 in 2D
  Exec exec = Exec::Parallel;
};

WeightClassReport estimate_A1_constant(const WeightSpec& w, const BallFamily& family,
                                       const QuadratureScheme& scheme,
                                       const EstimatorOptions& opts = {});
WeightClassReport estimate_Ap_constant(const WeightSpec& w, double p, const BallFamily& family,
                                       const QuadratureScheme& scheme,
                                       const EstimatorOptions& opts = {});
WeightClassReport estimate_Apq_constant(const WeightSpec& w, double p, double q,
                                        const BallFamily& family, const QuadratureScheme& scheme,
                                        const EstimatorOptions& opts = {});
WeightClassReport estimate_RH_constant(const WeightSpec& w, double s, const BallFamily& family,
                                       const QuadratureScheme& scheme,
                                       const EstimatorOptions& opts = {});

struct CriticalIndices {
  double q_tilde = 1.0;  // inf{q : w in A_q}
  double q_lo = 1.0;
  double q_hi = 1.0;
  bool q_unbounded = false;  // no A_q class found up to the cap
  double r_w = kInfinity;    // sup{r : w in RH_r}
  double r_lo = 1.0;
  double r_hi = kInfinity;
  double tol = 1e-2;
  double cap = 1024.0;
};

CriticalIndices critical_indices(const WeightSpec& w, const BallFamily& family,
                                 const QuadratureScheme& scheme, double tol = 1e-2,
                                 double cap = 1024.0, const EstimatorOptions& opts = {});

/// max over j and sample points of w(A_j x) / w(x).
double check_matrix_compatibility(const WeightSpec& w, const MatrixFamily& a,
                                  std::span<const Point> sample);

struct DoublingReport {
  double p = 1.0;
  double lambda = 2.0;
  double class_constant = 1.0;  // estimated [w]_{A_p}
  double worst_ratio = 0.0;     // max w(lambda B) / w(B)
  double worst_normalized = 0.0;  // max w(lambda B) / (lambda^{np} [w] w(B))
  Ball witness;
  bool pass = false;
};

/// Checks w(lambda B) <= lambda^{np} [w]_{A_p} w(B) on every ball of the family.
/// Throws HypothesisFailed when the A_p estimate diverges.
DoublingReport doubling_check(const WeightSpec& w, double p, double lambda,
                              const BallFamily& family, const QuadratureScheme& scheme,
                              const EstimatorOptions& opts = {});

}  // namespace rieszw
