#pragma once

#include "rieszw/core.hpp"
#include "rieszw/operators.hpp"
#include "rieszw/parallel.hpp"
#include "rieszw/poly.hpp"
#include "rieszw/quadrature.hpp"
#include "rieszw/weights.hpp"

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace rieszw {

/// Lower ends of the admissible (p0, d) ranges for a weight and p.
struct AtomParamRange {
  int n = 1;
  double p = 1.0;
  double p0_threshold = 1.0;  // p0 must exceed this
  int d_min = 0;
  CriticalIndices indices;
};

/// Uses the conservative bracket ends: q_hi for the degree, r_lo for p0.
AtomParamRange admissible_params(const CriticalIndices& indices, int n, double p);
AtomParamRange admissible_params(const WeightSpec& w, double p, const BallFamily& family,
                                 const QuadratureScheme& scheme, double tol = 1e-2,
                                 double cap = 1024.0);

struct AtomParams {
  WeightSpec weight;
  double p = 1.0;
  double p0 = 2.0;
  int d = 0;

  int dim() const { return weight.dim(); }
  /// p in (0, 1], finite p0 > 1, d >= 0.
  void validate() const;
  /// validate() plus p0 > threshold and d >= d_min.
  void validate(const AtomParamRange& range) const;
};

struct Atom {
  Ball ball;
  SampledFunction profile;
  AtomParams params;
  std::uint64_t seed = 0;
  double norm_p0 = 0.0;   // ||a||_{p0} at construction
  double w_ball = 0.0;    // w(B) at construction
};

/// ||f||_{p0} over the support of f. 1D polynomials are split at their roots.
double profile_norm(const SampledFunction& f, double p0);

/// int y^beta f(y) dy, exact for polynomial and grid profiles.
double profile_moment(const SampledFunction& f, const Multi& beta);

/// Removes the component of degree <= d in the unweighted L^2 inner product
/// of the profile's ball.
ScaledPolynomial project_moments(const ScaledPolynomial& poly, int d);

/// Random degree d + 2 profile on b with vanishing moments up to degree d,
/// scaled so that ||a||_{p0} = |B|^{1/p0} w(B)^{-1/p}. Throws
/// DegenerateProfile when the projection leaves less than 1e-12 of the norm.
Atom construct_atom(const Ball& b, const AtomParams& params, std::uint64_t seed,
                    const QuadratureScheme& scheme);

struct AtomValidation {
  double support_slack = 0.0;  // radius of B minus the radius the support needs
  double norm = 0.0;
  double norm_bound = 0.0;     // |B|^{1/p0} w(B)^{-1/p}
  double norm_margin = 0.0;    // norm / norm_bound - 1
  double moment_worst = 0.0;   // max |moment| / scale over |beta| <= d
  Multi moment_witness;
  bool a1 = false;
  bool a2 = false;
  bool a3 = false;

  bool pass() const { return a1 && a2 && a3; }
};

inline constexpr double kNormTolerance = 1e-8;
inline constexpr double kMomentTolerance = 1e-10;

AtomValidation validate_atom(const Atom& a, const AtomParams& params, const QuadratureScheme& scheme);

struct CampaignSpec {
  int count = 1;
  std::uint64_t seed = 0;
  std::vector<double> radii{1.0};
  std::vector<Point> centers{Point::Zero()};
  int max_retries = 8;
};

/// Seed of atom i; atom 0 uses the campaign seed itself.
std::uint64_t campaign_seed(std::uint64_t seed, std::size_t i);

/// Atom i sits on B(centers[(i / R) % C], radii[i % R]); a degenerate draw is
/// resampled with the next seed up to max_retries times.
std::vector<Atom> sample_atom_campaign(const AtomParams& params, const CampaignSpec& spec,
                                       const QuadratureScheme& scheme, Exec exec = Exec::Parallel);

nlohmann::json to_json(const Atom& a);
/// Inverse of to_json; the weight is not serialised and comes from the caller.
Atom atom_from_json(const nlohmann::json& j, const WeightSpec& w);

}  // namespace rieszw
