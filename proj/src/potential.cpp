#include "semilab/potential.hpp"

#include <cmath>
#include <string>

namespace semilab {

namespace {

// 2 * sum_{j >= j0} exp(-w j^2), summed until terms are negligible.
double one_sided_tail(double w, int j0) {
  double s = 0.0;
  for (int j = std::max(j0, 0); j < j0 + 10000; ++j) {
    const double t = std::exp(-w * double(j) * double(j));
    s += t;
    if (t < 1e-300 || (j > j0 && t < 1e-18 * s)) break;
  }
  return 2.0 * s;
}

// sum over all integers j of exp(-w (j + a)^2), maximized over a.
double full_lattice_sum_bound(double w) { return 1.0 + one_sided_tail(w, 1) + 1.0; }

} // namespace

int required_periodization_radius(double width, int dim) {
  if (!(width > 0.0)) throw Error("potential: bump width must be > 0");
  // For x in [0,1) and c in [-1,1) the per-axis offset x - c lies in (-1, 2),
  // so every dropped shift |m| > K sits at distance >= K - 1 from it.
  const double full = full_lattice_sum_bound(width);
  for (int K = 1; K <= 100000; ++K) {
    const double tail = dim * std::pow(full, dim - 1) * one_sided_tail(width, K - 1);
    if (tail < kTailTolerance) return K;
  }
  throw Error("potential: bump width too small to periodize");
}

void validate(const PotentialSpec &spec, int dim) {
  for (const auto &b : spec.bumps) {
    if (!(b.width > 0.0) || !std::isfinite(b.width))
      throw Error("potential: bump width must be finite and > 0");
    if (!std::isfinite(b.amplitude)) throw Error("potential: bump amplitude must be finite");
    for (int k = 0; k < dim; ++k)
      if (!(b.center[k] >= -1.0 && b.center[k] < 1.0))
        throw Error("potential: bump center must lie in [-1,1)^dim");
    const int K = required_periodization_radius(b.width, dim);
    if (K > spec.periodization_radius)
      throw Error("potential: periodization radius " + std::to_string(spec.periodization_radius) +
                  " too small for width " + std::to_string(b.width) + " (needs " +
                  std::to_string(K) + ")");
  }
}

double potential_at(const PotentialSpec &spec, const Point &x, int dim) {
  double v = 0.0;
  for (const auto &b : spec.bumps) {
    const int K = required_periodization_radius(b.width, dim);
    std::vector<double> ex(2 * K + 1), ey(2 * K + 1, 1.0);
    for (int m = -K; m <= K; ++m) {
      const double dx = x[0] - b.center[0] - m;
      ex[m + K] = std::exp(-b.width * dx * dx);
      if (dim == 2) {
        const double dy = x[1] - b.center[1] - m;
        ey[m + K] = std::exp(-b.width * dy * dy);
      }
    }
    double sx = 0.0, sy = 0.0;
    for (double e : ex) sx += e;
    if (dim == 2)
      for (double e : ey) sy += e;
    else
      sy = 1.0;
    v += b.amplitude * sx * sy;
  }
  return v;
}

ScalarField potential_eval(const PotentialSpec &spec, const TorusGrid &grid) {
  validate(spec, grid.dim());
  return sample(grid, [&](const Point &p) { return potential_at(spec, p, grid.dim()); }, "V");
}

PotentialSpec three_bump_potential() {
  PotentialSpec s;
  s.bumps = {{5.0, 10.0, {0.75, 0.5}}, {2.0, 10.0, {-0.25, 0.75}}, {3.0, 5.0, {-0.25, -0.25}}};
  return s;
}

PotentialSpec bumps_and_well_potential() {
  PotentialSpec s;
  s.bumps = {{5.0, 10.0, {0.75, 0.5}}, {2.0, 10.0, {-0.25, 0.75}}, {-3.0, 5.0, {-0.25, -0.25}}};
  return s;
}

} // namespace semilab
