#include "semilab/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semilab/fit.hpp"
#include "semilab/parallel.hpp"

namespace semilab {

DoublingReport doubling_survey(const ScalarField &u, double h, const std::vector<Point> &centers,
                               const std::vector<double> &radii, double radius_factor) {
  if (!(h > 0.0)) throw Error("doubling_survey: h must be > 0");
  for (double r : radii) {
    if (!(r >= radius_factor * h * (1.0 - 1e-12)))
      throw Error("doubling_survey: r = " + std::to_string(r) + " is below " + std::to_string(radius_factor) + " h");
    if (!(2.0 * r < 0.25)) throw Error("doubling_survey: 2r must stay below 1/4");
  }
  DoublingReport rep;
  rep.h = h;
  const std::size_t nr = radii.size();
  std::vector<DoublingSample> all(centers.size() * nr);
  std::vector<char> ok(all.size(), 0);
  parallel_for(centers.size(), [&](std::size_t c) {
    for (std::size_t j = 0; j < nr; ++j) {
      const double inner = ball_l2_norm(u, BallSpec{centers[c], radii[j]}).value;
      const double outer = ball_l2_norm(u, BallSpec{centers[c], 2.0 * radii[j]}).value;
      DoublingSample &s = all[c * nr + j];
      s.p = centers[c];
      s.r = radii[j];
      if (!(inner > 0.0)) continue;
      s.exponent = h * std::log(outer / inner);
      ok[c * nr + j] = 1;
    }
  });
  rep.max_exponent = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!ok[i]) {
      ++rep.dropped;
      continue;
    }
    rep.samples.push_back(all[i]);
    if (all[i].exponent > rep.max_exponent) {
      rep.max_exponent = all[i].exponent;
      rep.argmax = all[i];
    }
  }
  if (rep.dropped) rep.flags.push_back(std::to_string(rep.dropped) + " samples dropped (inner ball norm zero)");
  if (rep.samples.empty()) {
    rep.max_exponent = std::numeric_limits<double>::quiet_NaN();
    rep.flags.push_back("no usable samples");
  }
  return rep;
}

std::vector<Point> center_lattice(const TorusGrid &grid, int stride) {
  if (stride < 1) throw Error("center_lattice: stride must be >= 1");
  std::vector<Point> out;
  const int n = grid.n();
  const double s = grid.spacing();
  if (grid.dim() == 1) {
    for (int i = 0; i < n; i += stride) out.push_back({i * s, 0.0});
    return out;
  }
  for (int iy = 0; iy < n; iy += stride)
    for (int ix = 0; ix < n; ix += stride) out.push_back({ix * s, iy * s});
  return out;
}

int tunneling_stride(const TorusGrid &grid, double r) {
  const int by_radius = static_cast<int>(std::floor(0.5 * r / grid.spacing()));
  return std::max(1, std::min(by_radius, grid.n() / 10));
}

TunnelingReport tunneling_survey(const ScalarField &u, double h, double r, int stride) {
  if (!(r > 0.0 && r < 0.25)) throw Error("tunneling_survey: r must satisfy 0 < r < 1/4");
  const auto centers = center_lattice(u.grid, stride);
  if (u.grid.dim() == 2 && centers.size() < 100)
    throw Error("tunneling_survey: stride " + std::to_string(stride) + " gives fewer than 100 centres");
  TunnelingReport rep;
  rep.h = h;
  rep.r = r;
  rep.stride = stride;
  rep.centers = centers.size();
  rep.total_norm = u.l2_norm();
  std::vector<double> norms(centers.size());
  parallel_for(centers.size(), [&](std::size_t c) { norms[c] = ball_l2_norm(u, BallSpec{centers[c], r}).value; });
  const auto it = std::min_element(norms.begin(), norms.end());
  rep.min_norm = *it;
  rep.worst_center = centers[static_cast<std::size_t>(it - norms.begin())];
  rep.c_meas = -h * std::log(rep.min_norm / rep.total_norm);
  return rep;
}

VanishingOrderReport vanishing_order(const ScalarField &u, const Point &p, double h) {
  VanishingOrderReport rep;
  rep.h = h;
  rep.p = p;
  for (double r = 4.0 * u.grid.spacing(); r <= 0.1 * (1.0 + 1e-12); r *= 2.0) rep.radii.push_back(r);
  if (rep.radii.size() < 4)
    throw Error("vanishing_order: fewer than four dyadic radii between 4 spacings and 0.1; refine the grid");
  for (double r : rep.radii) rep.norms.push_back(smooth_ball_l2_norm(u, BallSpec{p, r}).value);
  rep.k_est = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t j = 0; j < rep.norms.size(); ++j)
    if (!(rep.norms[j] > 0.0) || (j > 0 && !(rep.norms[j] > rep.norms[j - 1]))) {
      rep.flags.push_back("ball norms not increasing in r; no power law");
      return rep;
    }
  std::vector<double> x, y;
  for (std::size_t j = 0; j < rep.radii.size(); ++j) {
    x.push_back(std::log(rep.radii[j]));
    y.push_back(std::log(rep.norms[j]));
  }
  // secant slopes; stop before the first bend above the threshold
  std::size_t keep = 2;
  double prev = (y[1] - y[0]) / (x[1] - x[0]);
  for (std::size_t j = 2; j < x.size(); ++j) {
    const double s = (y[j] - y[j - 1]) / (x[j] - x[j - 1]);
    if (std::abs(s - prev) > kPowerLawCurvature) break;
    prev = s;
    keep = j + 1;
  }
  rep.fit_count = keep;
  if (keep < 4) {
    rep.flags.push_back("power law holds over fewer than four radii");
    return rep;
  }
  const LinearFit f = fit_line(std::span(x).first(keep), std::span(y).first(keep));
  rep.slope = f.slope;
  rep.k_est = f.slope - 0.5 * u.grid.dim();
  return rep;
}

int vanishing_grid_size(double h) {
  if (!(h > 0.0)) throw Error("vanishing_grid_size: h must be > 0");
  return next_pow2(static_cast<int>(std::ceil(32.0 / h)), 512);
}

std::vector<Point> nodal_minima(const ScalarField &u, const ScalarField &V, double E, std::size_t count) {
  if (V.grid != u.grid) throw Error("nodal_minima: V and u live on different grids");
  const TorusGrid &g = u.grid;
  const int n = g.n();
  const bool two = g.dim() == 2;
  std::vector<std::pair<double, std::size_t>> found;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(V.values[i] < E)) continue;
    const auto c = g.coords(i);
    const double a = std::abs(u.values[i]);
    bool is_min = true, pos = u.values[i] >= 0.0, neg = u.values[i] <= 0.0;
    for (int dy = two ? -1 : 0; dy <= (two ? 1 : 0) && is_min; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const std::size_t j = g.index((c[0] + dx + n) % n, two ? (c[1] + dy + n) % n : 0);
        if (std::abs(u.values[j]) < a) {
          is_min = false;
          break;
        }
        pos |= u.values[j] > 0.0;
        neg |= u.values[j] < 0.0;
      }
    if (is_min && pos && neg) found.push_back({a, i});
  }
  std::sort(found.begin(), found.end());
  if (found.size() > count) found.resize(count);
  std::vector<Point> out;
  for (const auto &f : found) out.push_back(g.point(f.second));
  return out;
}

Point deepest_nodal_minimum(const ScalarField &u, const ScalarField &V, double E) {
  const auto m = nodal_minima(u, V, E, 1);
  if (m.empty()) throw Error("deepest_nodal_minimum: no nodal minimum of |u| in {V < E}");
  return m.front();
}

} // namespace semilab
