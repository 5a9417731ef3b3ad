#pragma once

#include "rieszw/atoms.hpp"
#include "rieszw/core.hpp"
#include "rieszw/geometry.hpp"
#include "rieszw/matrix.hpp"
#include "rieszw/operators.hpp"
#include "rieszw/parallel.hpp"
#include "rieszw/weights.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rieszw {

enum class Status { Pass, Fail, HypothesisFailed, Skipped };
std::string to_string(Status s);

/// One audited hypothesis with the number that decided it.
struct Audit {
  std::string item;
  double value = 0.0;
  std::string detail;
  bool pass = false;
};

struct VerificationReport {
  std::string check_id;
  std::vector<Audit> audits;
  std::string sample;
  double worst = 0.0;
  std::vector<double> series;
  std::vector<std::string> series_labels;
  Status status = Status::Fail;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json details = nlohmann::json::object();

  bool pass() const { return status == Status::Pass; }
};

nlohmann::json to_json(const VerificationReport& r);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// max / min of a positive series; +inf if some entry is not finite or not positive.
double drift_of(const std::vector<double>& series);

/// lhs / rhs, or 0 when both are below 1e-14.
double safe_ratio(double lhs, double rhs);

// ---------------------------------------------------------------------------
// Pointwise atom bound

/// Outer-region sample points: A_k x0 + t 2Mr e for t in {1.25, 2, 4, 8} and
/// unit directions e (two in 1D, eight in 2D), with t doubling further until
/// the samples pass the origin, plus the origin and the midpoints between the
/// centres A_k x0. Each refinement level adds the geometric midpoints in t and
/// doubles the 2D directions. Points that fall in some expanded ball are dropped.
std::vector<Point> outer_samples(const Ball& b, const MatrixFamily& a, int level = 0);

/// Estimates C* = max |T a(x)| / rhs(x) over the sample for the bound
/// w(B)^{-1/p} r^{n+d+1} |x - A_k x0|^{-n+alpha-d-1} and, when alpha > 0, for
/// w(B)^{-1/p} [M_beta(chi_B)(A_k^{-1} x)]^{(n+d+1)/n}, beta = alpha n / (n+d+1).
/// Throws MisclassifiedSample when a sample point lies in an expanded ball.
VerificationReport check_pointwise_atom_bound(const Atom& a, const AtomParams& params,
                                              const ExponentProfile& e, const MatrixFamily& m,
                                              std::span<const Point> xs,
                                              const QuadratureScheme& scheme);

/// Runs check_pointwise_atom_bound on make_atom(B(center, r)) for every r,
/// on the base and the refined sample, and passes when every constant is
/// finite and each series drifts by less than the factor.
VerificationReport pointwise_bound_study(const std::function<Atom(const Ball&)>& make_atom,
                                         const AtomParams& params, const Point& center,
                                         std::span<const double> radii, const ExponentProfile& e,
                                         const MatrixFamily& m, const QuadratureScheme& scheme,
                                         double drift = 4.0, Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Geometric and weight lemmas

/// min over pairs and i of |x - A_i xi| / |x - A_i x0|; passes when >= 1/2.
VerificationReport check_containment_step(const Ball& b, const MatrixFamily& a,
                                          std::span<const Point> xis, std::span<const Point> xs);

/// [w^p(B)]^{-1/p} [w^q(B)]^{1/q} <= [w^p]_{RH_{q/p}}^{1/p} |B|^{-alpha/n} over the
/// family, with 1/q = 1/p - alpha/n. HypothesisFailed (not thrown) when w^p
/// is not in RH_{q/p}.
VerificationReport check_rh_ball_inequality(const WeightSpec& w, double p, double alpha,
                                            const BallFamily& family, const QuadratureScheme& scheme,
                                            const EstimatorOptions& opts = {});

/// p r_{w^p} <= r_w <= r_{w^p} (needs w^{1/p} in A_1, 0 < p < 1) and, when
/// q > p, p r_{w^p} <= q r_{w^q} (needs w^q in A_1). Infinite indices compare
/// in extended arithmetic; each side gets the bisection tolerance as slack.
VerificationReport check_critical_index_lemmas(const WeightSpec& w, double p, double q,
                                               const BallFamily& family, const QuadratureScheme& scheme,
                                               double tol = 1e-2, const EstimatorOptions& opts = {});

// ---------------------------------------------------------------------------
// Maximal inequalities

struct MaximalCheckSpec {
  double p = 2.0;
  double q = 0.0;      // 0 for the Hardy-Littlewood case
  double alpha = 0.0;  // fractional order (Apq case: 1/q = 1/p - alpha/n)
  std::vector<Ball> tests;  // indicator test functions
  MaximalPolicy policy{64, 0};
  double drift = 4.0;
};

/// sup over the tests of ||M f||_{L^p_w} / ||f||_{L^p_w}, or of
/// ||M_alpha f||_{L^q_{w^q}} / ||f||_{L^p_{w^p}} when q > 0. The refined pass
/// halves the lattice step and adds the midpoints of consecutive test radii.
VerificationReport check_maximal_inequalities(const WeightSpec& w, const MaximalCheckSpec& spec,
                                              const QuadratureScheme& scheme,
                                              Exec exec = Exec::Parallel);

/// (sum |lambda_j|^{min(1,q)})^{1/min(1,q)}; the report asserts it is at most
/// (sum |lambda_j|^p)^{1/p}.
double quasi_norm_assembly(std::span<const double> lambdas, double q);
VerificationReport check_quasi_norm_assembly(std::span<const double> lambdas, double q, double p);

// ---------------------------------------------------------------------------
// Theorem campaigns

enum class Theorem { Thm1, Ta, Corollary };
std::string to_string(Theorem t);

struct TheoremSpec {
  Theorem theorem = Theorem::Thm1;
  WeightSpec w = WeightSpec::constant(1);
  ExponentProfile e;
  MatrixFamily a = MatrixFamily::identity(1);
  double p = 1.0;
  double s = 0.0;   // Ta: lower end of the p range; 0 takes p
  double p0 = 0.0;  // 0 picks a default inside the admissible interval
  int d = -1;       // -1 picks the minimum
  CampaignSpec campaign;
  QuadratureScheme scheme;          // for T a(x)
  double fine_cells = 16.0;         // cells per expanded-ball diameter
  double drift = 4.0;
  double index_tol = 1e-2;
  EstimatorOptions estimator;       // for the weight-class audits
  Exec exec = Exec::Parallel;
};

/// Audits the hypotheses, samples the atoms, and integrates |T a|^t w^t over
/// the whole line split into the expanded balls and the outer region. The
/// refined pass halves the mesh and doubles the kernel resolution. Throws
/// HypothesisFailed naming the first failed audit.
VerificationReport run_theorem_campaign(const TheoremSpec& spec);

}  // namespace rieszw
