#pragma once

#include <cstddef>
#include <vector>

#include "semilab/grid.hpp"

namespace semilab {

/// Periodic Euclidean ball B(p, r) on the torus; r < 1/4 keeps it embedded.
struct BallSpec {
  Point center{0.0, 0.0};
  double radius = 0.0;
};

void validate(const BallSpec &ball);

/// Grid indices whose periodic distance to the center is < r, ordered by
/// offset from the center cell (row-major).
std::vector<std::size_t> ball_mask(const TorusGrid &grid, const BallSpec &ball);

/// Mask quadrature result; `empty` flags an under-resolved ball.
struct BallIntegral {
  double value = 0.0;
  bool empty = false;
};

/// sqrt(sum_{mask} u^2 * spacing^dim).
BallIntegral ball_l2_norm(const ScalarField &field, const BallSpec &ball);

/// Same as ball_l2_norm but with a precomputed mask.
double masked_l2_norm(const ScalarField &field, const std::vector<std::size_t> &mask);

/// L^2 norm over the ball with each grid point weighted by
/// clamp(r - d + spacing/2, 0, spacing)/spacing (d its distance to the
/// center): the boundary layer is shared instead of cut at d < r, which
/// removes the O(spacing/r) bias of the plain mask.
BallIntegral smooth_ball_l2_norm(const ScalarField &field, const BallSpec &ball);

} // namespace semilab
