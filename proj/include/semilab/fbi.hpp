#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "semilab/eigensolver.hpp"
#include "semilab/grid.hpp"

namespace semilab {

using cplx = std::complex<double>;

/// Raised-cosine cutoff, 1 on [flat_lo, flat_hi] per axis and 0 outside
/// (support_lo, support_hi). Used to turn a periodic field into a compactly
/// supported function on R^dim.
struct Window {
  double flat_lo = 0.2;
  double flat_hi = 0.8;
  double support_lo = 0.05;
  double support_hi = 0.95;

  double operator()(double t) const;
  double operator()(const Point &p, int dim) const;
};

/// Product lattice x_axis^dim times xi_axis^dim. Both axes are uniform.
struct PhaseSpaceGrid {
  int dim = 1;
  double h_fbi = 0.1;
  std::vector<double> x_axis;
  std::vector<double> xi_axis;

  std::size_t x_count() const;
  std::size_t xi_count() const;
  double dx() const { return x_axis.size() > 1 ? x_axis[1] - x_axis[0] : 1.0; }
  double dxi() const { return xi_axis.size() > 1 ? xi_axis[1] - xi_axis[0] : 1.0; }
  Point x_point(std::size_t i) const;
  Point xi_point(std::size_t j) const;
  std::vector<Point> x_points() const;
  std::vector<Point> xi_points() const;
  double xi_max() const;
};

/// Lattice with spacing <= step (default sqrt(h)/4) on [x_lo, x_hi] and
/// [-xi_max, xi_max].
PhaseSpaceGrid make_phase_grid(int dim, double h_fbi, double x_lo, double x_hi, double xi_max,
                               double step = 0.0);

/// x-range covers the window support plus the Gaussian reach on both sides,
/// so |T u|^2 is negligible outside.
PhaseSpaceGrid window_phase_grid(int dim, double h_fbi, double xi_max, const Window &w = {},
                                 double step = 0.0);

/// x lattice of m = max(32, 2^ceil(log2(4/sqrt(h)))) points per axis on the
/// torus, xi lattice on [-xi_max, xi_max].
PhaseSpaceGrid torus_phase_grid(int dim, double h_fbi, double xi_max);

/// Samples of T u on a PhaseSpaceGrid; index [ix * xi_count + ixi].
struct PhaseSpaceField {
  PhaseSpaceGrid grid;
  std::vector<cplx> values;
  /// 2^{-dim/2} (pi h)^{-3 dim/4}
  double normalization = 0.0;

  cplx &at(std::size_t ix, std::size_t ixi) { return values[ix * grid.xi_count() + ixi]; }
  const cplx &at(std::size_t ix, std::size_t ixi) const { return values[ix * grid.xi_count() + ixi]; }
};

double fbi_normalization(int dim, double h);

/// Half-width of the y-region where exp(-|x - y|^2 / (2h)) >= 1e-16.
double fbi_reach(double h);

/// Largest refined grid (points) fbi_forward will build.
inline constexpr std::size_t kFbiMemoryCap = std::size_t(1) << 22;

/// T u by trapezoidal quadrature over the Gaussian reach, on u upsampled to
/// step <= h/(8(|xi|_max + 1)). With a window the integrand is chi*u; without
/// one, the periodic extension of u.
PhaseSpaceField fbi_forward(const ScalarField &u, const PhaseSpaceGrid &pg,
                            const std::optional<Window> &window = std::nullopt);
PhaseSpaceField fbi_forward(const TorusGrid &grid, const std::vector<cplx> &u, const PhaseSpaceGrid &pg,
                            const std::optional<Window> &window = std::nullopt);

/// Exact T u of the periodic extension of a band-limited field:
/// c (2 pi h)^{dim/2} sum_k u_k exp(-|xi - 2 pi h k|^2 / (2h)) exp(2 pi i k.x).
/// Nyquist bins are left out. x must lie on the torus lattice.
PhaseSpaceField fbi_periodic(const ScalarField &u, const PhaseSpaceGrid &pg);
PhaseSpaceField fbi_periodic(const TorusGrid &grid, const std::vector<cplx> &u, const PhaseSpaceGrid &pg);

/// Largest share of sum |F|^2 the adjoint accepts on the outermost xi layer.
inline constexpr double kAdjointEdgeLimit = 1e-6;

/// T* F sampled on `target` by conjugate-kernel quadrature over the lattice.
/// Throws if the outermost xi layer carries more than kAdjointEdgeLimit of
/// |F|^2.
std::vector<cplx> fbi_adjoint_complex(const PhaseSpaceField &F, const TorusGrid &target);
/// Real part of fbi_adjoint_complex.
ScalarField fbi_adjoint(const PhaseSpaceField &F, const TorusGrid &target);

/// Fraction of sum |F|^2 on the outermost x and xi layers of the lattice.
double boundary_mass_fraction(const PhaseSpaceField &F);

struct IsometryReport {
  double defect = 0.0;
  /// Boundary-layer mass of |T u|^2 relative to ||u||^2.
  double tail = 0.0;
  bool zero_norm = false;
};

/// | ||T(chi u)||_{L^2(x,xi)} - ||chi u|| | / ||chi u||.
IsometryReport isometry_defect(const ScalarField &u, const PhaseSpaceGrid &pg, const Window &w = {});

/// || h D_x F - (xi + i h D_xi) F || / ||F|| over the lattice interior,
/// with fourth-order centered differences, summed over axes.
double holomorphy_residual(const PhaseSpaceField &F);

struct DecayRow {
  double h = 0.0;
  double sup = 0.0;      // sup |T_h u| over the lattice with |xi| >= C0
  double sup_norm = 0.0; // ||u||_inf
  double ratio = 0.0;    // sup / sup_norm
  bool dropped = false;  // below the floating-point floor
};

struct DecayReport {
  double xi_threshold = 0.0;
  double delta = 0.0;
  double log_C1 = 0.0;
  double r2 = 0.0;
  std::vector<DecayRow> table; // h strictly decreasing
  std::vector<std::string> flags;
};

/// Ratios under this are treated as roundoff.
inline constexpr double kDecayFloor = 1e-13;

/// Torus lattice for decay_scan at parameter h: xi_max =
/// max(2 sqrt(max(E - vmin, 1)), C0 + 1). Rejects C0^2 <= E - vmin.
PhaseSpaceGrid decay_grid(int dim, double h, double E, double vmin, double C0);

/// Fits ln(s(h)/||u||_inf) = ln C1 - delta/h over the pairs (h_fbi = h from
/// each grid). Needs >= 3 distinct h.
DecayReport decay_scan(const std::vector<EigenPair> &pairs, const std::vector<PhaseSpaceGrid> &grids,
                       double C0);

} // namespace semilab
