#include "semilab/ball.hpp"

#include <algorithm>
#include <cmath>

namespace semilab {

void validate(const BallSpec &ball) {
  if (!(ball.radius > 0.0) || !(ball.radius < 0.25))
    throw Error("ball: radius must satisfy 0 < r < 1/4");
}

// Distances are measured in grid units relative to the center's base cell,
// so translating center and field by a grid vector reproduces the same
// offsets in the same order.
std::vector<std::size_t> ball_mask(const TorusGrid &grid, const BallSpec &ball) {
  validate(ball);
  const int n = grid.n();
  const double R = ball.radius * n;
  const double R2 = R * R;
  const int reach = static_cast<int>(std::ceil(R)) + 1;
  auto split = [n](double c, long &base, double &frac) {
    const double g = c * n;
    base = static_cast<long>(std::floor(g));
    frac = g - static_cast<double>(base);
  };
  auto wrap = [n](long i) { return static_cast<int>(((i % n) + n) % n); };
  long bx = 0, by = 0;
  double fx = 0.0, fy = 0.0;
  split(ball.center[0], bx, fx);
  std::vector<std::size_t> out;
  if (grid.dim() == 1) {
    for (int di = -reach; di <= reach; ++di) {
      const double d = di - fx;
      if (d * d < R2) out.push_back(static_cast<std::size_t>(wrap(bx + di)));
    }
    return out;
  }
  split(ball.center[1], by, fy);
  for (int dj = -reach; dj <= reach; ++dj) {
    const double ey = dj - fy;
    if (ey * ey >= R2) continue;
    const int jj = wrap(by + dj);
    for (int di = -reach; di <= reach; ++di) {
      const double ex = di - fx;
      if (ex * ex + ey * ey < R2) out.push_back(grid.index(wrap(bx + di), jj));
    }
  }
  return out;
}

double masked_l2_norm(const ScalarField &field, const std::vector<std::size_t> &mask) {
  double s = 0.0;
  for (auto i : mask) s += field.values[i] * field.values[i];
  return std::sqrt(s * field.grid.cell_volume());
}

BallIntegral ball_l2_norm(const ScalarField &field, const BallSpec &ball) {
  auto mask = ball_mask(field.grid, ball);
  if (mask.empty()) return {0.0, true};
  return {masked_l2_norm(field, mask), false};
}

BallIntegral smooth_ball_l2_norm(const ScalarField &field, const BallSpec &ball) {
  validate(ball);
  const TorusGrid &g = field.grid;
  const int n = g.n();
  const double R = ball.radius * n;
  const int reach = static_cast<int>(std::ceil(R)) + 2;
  const double cx = ball.center[0] * n, cy = ball.center[1] * n;
  const long bx = static_cast<long>(std::floor(cx)), by = static_cast<long>(std::floor(cy));
  auto wrap = [n](long i) { return static_cast<int>(((i % n) + n) % n); };
  auto weight = [R](double d) { return std::clamp(R - d + 0.5, 0.0, 1.0); };
  double s = 0.0;
  bool any = false;
  const bool two = g.dim() == 2;
  for (int dj = two ? -reach : 0; dj <= (two ? reach : 0); ++dj) {
    const double ey = two ? by + dj - cy : 0.0;
    const int jj = two ? wrap(by + dj) : 0;
    for (int di = -reach; di <= reach; ++di) {
      const double ex = bx + di - cx;
      const double w = weight(std::sqrt(ex * ex + ey * ey));
      if (w <= 0.0) continue;
      any = true;
      const double v = field.values[g.index(wrap(bx + di), jj)];
      s += w * v * v;
    }
  }
  if (!any) return {0.0, true};
  return {std::sqrt(s * g.cell_volume()), false};
}

} // namespace semilab
