#include "rieszw/geometry.hpp"

namespace rieszw {

std::string RegionLabel::str() const {
  return (inside() ? "inside B*_" : "outer R_") + std::to_string(index + 1);
}

std::vector<Ball> expanded_balls(const Ball& b, const MatrixFamily& a) {
  if (b.n != a.dim()) throw InvalidArgument("ball and matrix family dimensions differ");
  std::vector<Ball> out;
  const double radius = 2.0 * a.norm_bound() * b.radius;
  for (int i = 0; i < a.size(); ++i) out.emplace_back(Point(a.matrix(i) * b.center), radius, b.n);
  return out;
}

RegionLabel classify(const Point& x, const Ball& b, const MatrixFamily& a) {
  if (b.n != a.dim()) throw InvalidArgument("ball and matrix family dimensions differ");
  const double radius = 2.0 * a.norm_bound() * b.radius;
  int nearest = 0;
  double best = kInfinity;
  for (int i = 0; i < a.size(); ++i) {
    const double d = (x - a.matrix(i) * b.center).head(b.n).norm();
    if (d <= radius) return {RegionLabel::Kind::InsideExpandedBall, i};
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  return {RegionLabel::Kind::OuterRegion, nearest};
}

MatrixDoublingReport matrix_doubling_check(const WeightSpec& w, const MatrixFamily& a,
                                           const BallFamily& family,
                                           const QuadratureScheme& scheme, double m_factor,
                                           Exec exec) {
  if (!(m_factor > 0.0)) throw InvalidArgument("expansion factor must be positive");
  if (w.dim() != a.dim()) throw InvalidArgument("weight and matrix family dimensions differ");
  const auto& balls = family.balls();
  const std::size_t m = static_cast<std::size_t>(a.size());
  const auto ratios = map_indices<double>(balls.size() * m, exec, [&](std::size_t k) {
    const Ball& b = balls[k / m];
    const int j = static_cast<int>(k % m);
    const Ball big(Point(a.matrix(j) * b.center), m_factor * a.norm_bound() * b.radius, b.n);
    return weighted_measure(w, 1.0, big, scheme) / weighted_measure(w, 1.0, b, scheme);
  });
  MatrixDoublingReport out;
  out.ball_count = balls.size();
  std::size_t arg = 0;
  for (std::size_t k = 1; k < ratios.size(); ++k) {
    if (ratios[k] > ratios[arg]) arg = k;
  }
  out.constant = ratios[arg];
  out.witness = balls[arg / m];
  out.matrix_index = static_cast<int>(arg % m);
  return out;
}

}  // namespace rieszw
