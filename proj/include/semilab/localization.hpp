#pragma once

#include <string>
#include <vector>

#include "semilab/ball.hpp"
#include "semilab/grid.hpp"

namespace semilab {

struct DoublingSample {
  Point p{0.0, 0.0};
  double r = 0.0;
  double exponent = 0.0; // h ln(||u||_B(p,2r) / ||u||_B(p,r))
};

struct DoublingReport {
  double h = 0.0;
  std::vector<DoublingSample> samples;
  double max_exponent = 0.0;
  DoublingSample argmax;
  std::size_t dropped = 0; // inner ball norm at zero
  std::vector<std::string> flags;
};

/// Radii below this multiple of h are outside the doubling regime.
inline constexpr double kDoublingRadiusFactor = 3.0;

/// Every r must satisfy r >= radius_factor * h and 2r < 1/4.
DoublingReport doubling_survey(const ScalarField &u, double h, const std::vector<Point> &centers,
                               const std::vector<double> &radii, double radius_factor = kDoublingRadiusFactor);

/// Grid points on a square lattice with the given stride (in grid points).
std::vector<Point> center_lattice(const TorusGrid &grid, int stride);

struct TunnelingReport {
  double h = 0.0;
  double r = 0.0;
  int stride = 0;
  std::size_t centers = 0;
  Point worst_center{0.0, 0.0};
  double min_norm = 0.0;
  double total_norm = 0.0;
  /// -h ln(min_p ||u||_B(p,r) / ||u||_L2(torus))
  double c_meas = 0.0;
};

/// Lattice stride with centres at most r/2 apart and at least ten per axis.
int tunneling_stride(const TorusGrid &grid, double r);

/// Minimum ball norm over center_lattice(grid, stride). Needs r < 1/4 and,
/// in 2-D, at least 100 centres.
TunnelingReport tunneling_survey(const ScalarField &u, double h, double r, int stride);

struct VanishingOrderReport {
  double h = 0.0;
  Point p{0.0, 0.0};
  std::vector<double> radii;
  std::vector<double> norms;
  std::size_t fit_count = 0; // radii used, from the smallest up
  double slope = 0.0;
  double k_est = 0.0; // slope - dim/2; NaN when no power law was found
  std::vector<std::string> flags;
};

/// Largest change of the ln-ln secant slope between dyadic steps kept in the
/// fit.
inline constexpr double kPowerLawCurvature = 0.1;

/// Dyadic radii 4 * 2^j spacing up to 0.1 (at least four, else throws),
/// norms by smooth_ball_l2_norm;
/// the fit runs from the smallest radius while the ln-ln curvature stays
/// under kPowerLawCurvature.
VanishingOrderReport vanishing_order(const ScalarField &u, const Point &p, double h);

/// Grid to upsample an eigenfunction to before vanishing_order: the power
/// of two >= max(512, 32/h), so the smallest radius is at most h/8.
int vanishing_grid_size(double h);

/// Grid points in {V < E} where |u| has a local minimum (3x3, periodic)
/// with a sign change among the neighbours, smallest |u| first, at most
/// `count` of them.
std::vector<Point> nodal_minima(const ScalarField &u, const ScalarField &V, double E, std::size_t count);

/// The first of nodal_minima; throws if there is none.
Point deepest_nodal_minimum(const ScalarField &u, const ScalarField &V, double E);

} // namespace semilab
