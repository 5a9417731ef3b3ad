#pragma once

#include "rieszw/core.hpp"
#include "rieszw/matrix.hpp"
#include "rieszw/parallel.hpp"
#include "rieszw/quadrature.hpp"
#include "rieszw/weights.hpp"

#include <string>
#include <vector>

namespace rieszw {

/// Where a point sits relative to an atom ball B = B(x0, r): inside one of the
/// expanded balls B(A_i x0, 2Mr), or in the outer region R_k of the nearest
/// transformed centre A_k x0. Indices are 0-based.
struct RegionLabel {
  enum class Kind { InsideExpandedBall, OuterRegion };
  Kind kind = Kind::OuterRegion;
  int index = 0;

  bool inside() const { return kind == Kind::InsideExpandedBall; }
  bool operator==(const RegionLabel&) const = default;
  std::string str() const;
};

/// B(A_i x0, 2 M r) for every matrix of the family.
std::vector<Ball> expanded_balls(const Ball& b, const MatrixFamily& a);

/// Smallest i with |x - A_i x0| <= 2Mr (boundary counts as inside); otherwise
/// the smallest k minimising |x - A_k x0|.
RegionLabel classify(const Point& x, const Ball& b, const MatrixFamily& a);

struct MatrixDoublingReport {
  double constant = 0.0;  // max w(B(A_j x0, factor M r)) / w(B(x0, r))
  Ball witness;
  int matrix_index = 0;
  std::size_t ball_count = 0;
};

MatrixDoublingReport matrix_doubling_check(const WeightSpec& w, const MatrixFamily& a,
                                           const BallFamily& family,
                                           const QuadratureScheme& scheme, double m_factor = 2.0,
                                           Exec exec = Exec::Parallel);

}  // namespace rieszw
