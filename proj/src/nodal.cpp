#include "semilab/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "semilab/fit.hpp"
#include "semilab/parallel.hpp"

namespace semilab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> nudged(const ScalarField &u) {
  const double eps = kZeroNudge * u.sup_norm();
  std::vector<double> v = u.values;
  for (auto &x : v)
    if (x == 0.0) x = eps;
  return v;
}

Point lerp(const Point &a, const Point &b, double va, double vb) {
  const double t = va / (va - vb);
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
}

// Squared distance transform along one periodic line (Felzenszwalb and
// Huttenlocher on three copies; the middle one is kept).
void edt_line(const double *f, std::size_t stride, int n, double *out, std::size_t out_stride,
              std::vector<double> &g, std::vector<int> &vtx, std::vector<double> &z) {
  const int m = 3 * n;
  g.resize(m);
  for (int q = 0; q < m; ++q) g[q] = f[static_cast<std::size_t>(q % n) * stride];
  vtx.assign(m, 0);
  z.assign(m + 1, 0.0);
  int k = -1;
  for (int q = 0; q < m; ++q) {
    if (g[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      vtx[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    auto meet = [&](int p) { return ((g[q] + double(q) * q) - (g[p] + double(p) * p)) / (2.0 * (q - p)); };
    double s = meet(vtx[k]);
    while (s <= z[k]) s = meet(vtx[--k]); // z[0] = -inf stops this
    ++k;
    vtx[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  for (int i = 0; i < n; ++i) {
    const int q = n + i;
    if (k < 0) {
      out[static_cast<std::size_t>(i) * out_stride] = kInf;
      continue;
    }
    int j = 0;
    while (z[j + 1] < q) ++j;
    const double d = q - vtx[j];
    out[static_cast<std::size_t>(i) * out_stride] = d * d + g[vtx[j]];
  }
}

// Squared distance (grid units) from every grid point to the nearest point
// where feature is true, on the periodic grid.
std::vector<double> periodic_edt(const TorusGrid &grid, const std::vector<char> &feature) {
  const int n = grid.n();
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = feature[i] ? 0.0 : kInf;
  std::vector<double> g;
  std::vector<int> v;
  std::vector<double> z;
  if (grid.dim() == 1) {
    std::vector<double> out(f.size());
    edt_line(f.data(), 1, n, out.data(), 1, g, v, z);
    return out;
  }
  std::vector<double> rows(f.size());
  for (int iy = 0; iy < n; ++iy)
    edt_line(f.data() + static_cast<std::size_t>(iy) * n, 1, n, rows.data() + static_cast<std::size_t>(iy) * n, 1,
             g, v, z);
  std::vector<double> out(f.size());
  for (int ix = 0; ix < n; ++ix) edt_line(rows.data() + ix, n, n, out.data() + ix, n, g, v, z);
  return out;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

} // namespace

double NodalSegment::length() const { return std::hypot(b[0] - a[0], b[1] - a[1]); }

NodalSet extract_nodal_set(const ScalarField &u) {
  NodalSet set;
  set.grid = u.grid;
  const TorusGrid &g = u.grid;
  const int n = g.n();
  const double s = g.spacing();
  const std::vector<double> v = nudged(u);

  if (g.dim() == 1) {
    for (int i = 0; i < n; ++i) {
      const double a = v[i], b = v[(i + 1) % n];
      if ((a > 0.0) != (b > 0.0)) set.crossings.push_back((i + a / (a - b)) * s);
    }
    set.total_measure = static_cast<double>(set.crossings.size());
    return set;
  }

  std::vector<std::vector<NodalSegment>> rows(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const int iy = static_cast<int>(row);
    const int jy = (iy + 1) % n;
    auto &out = rows[row];
    for (int ix = 0; ix < n; ++ix) {
      const int jx = (ix + 1) % n;
      // corners counter-clockwise from the lower left
      const double c[4] = {v[g.index(ix, iy)], v[g.index(jx, iy)], v[g.index(jx, jy)], v[g.index(ix, jy)]};
      const bool pos[4] = {c[0] > 0.0, c[1] > 0.0, c[2] > 0.0, c[3] > 0.0};
      const Point P[4] = {{ix * s, iy * s}, {(ix + 1) * s, iy * s}, {(ix + 1) * s, (iy + 1) * s}, {ix * s, (iy + 1) * s}};
      // edges: bottom c0-c1, right c1-c2, top c3-c2, left c0-c3
      Point e[4];
      bool cut[4];
      const int ea[4] = {0, 1, 3, 0}, eb[4] = {1, 2, 2, 3};
      int ncut = 0;
      for (int k = 0; k < 4; ++k) {
        cut[k] = pos[ea[k]] != pos[eb[k]];
        if (cut[k]) {
          e[k] = lerp(P[ea[k]], P[eb[k]], c[ea[k]], c[eb[k]]);
          ++ncut;
        }
      }
      const std::size_t cell = g.index(ix, iy);
      if (ncut == 2) {
        int k0 = -1, k1 = -1;
        for (int k = 0; k < 4; ++k)
          if (cut[k]) (k0 < 0 ? k0 : k1) = k;
        out.push_back({e[k0], e[k1], cell});
      } else if (ncut == 4) {
        const double avg = (c[0] + c[1] + c[2] + c[3]) / 4.0;
        if (avg != 0.0 && (avg > 0.0) == pos[0]) {
          out.push_back({e[0], e[1], cell}); // around c1
          out.push_back({e[2], e[3], cell}); // around c3
        } else {
          out.push_back({e[3], e[0], cell}); // around c0
          out.push_back({e[1], e[2], cell}); // around c2
        }
      }
    }
  });
  for (auto &r : rows)
    for (auto &seg : r) {
      set.total_measure += seg.length();
      set.segments.push_back(seg);
    }
  return set;
}

int nodal_domain_count(const ScalarField &u) {
  const TorusGrid &g = u.grid;
  const int n = g.n();
  const auto &v = u.values;
  auto sgn = [&](std::size_t i) { return (v[i] > 0.0) - (v[i] < 0.0); };
  UnionFind uf(g.size());
  if (g.dim() == 1) {
    for (int i = 0; i < n; ++i) {
      const std::size_t a = i, b = (i + 1) % n;
      if (sgn(a) != 0 && sgn(a) == sgn(b)) uf.join(a, b);
    }
  } else {
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const std::size_t c0 = g.index(ix, iy), c1 = g.index((ix + 1) % n, iy), c2 = g.index((ix + 1) % n, (iy + 1) % n),
                          c3 = g.index(ix, (iy + 1) % n);
        const int s0 = sgn(c0);
        if (s0 != 0 && s0 == sgn(c1)) uf.join(c0, c1);
        if (s0 != 0 && s0 == sgn(c3)) uf.join(c0, c3);
        const int s1 = sgn(c1), s2 = sgn(c2), s3 = sgn(c3);
        if (s0 == 0 || s1 == 0 || s2 == 0 || s3 == 0) continue;
        if (s0 == s2 && s1 == s3 && s0 != s1) {
          const double avg = (v[c0] + v[c1] + v[c2] + v[c3]) / 4.0;
          if (avg != 0.0 && (avg > 0.0) == (s0 > 0))
            uf.join(c0, c2);
          else
            uf.join(c1, c3);
        }
      }
  }
  int count = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (sgn(i) != 0 && uf.find(i) == i) ++count;
  return count;
}

NodalScaling nodal_measure_scaling(const std::vector<EigenPair> &pairs) {
  if (pairs.size() < 3) throw Error("nodal_measure_scaling: needs at least three h values");
  NodalScaling out;
  std::vector<double> x, y;
  bool zero = false;
  for (const auto &p : pairs) {
    const double m = extract_nodal_set(p.field).total_measure;
    out.h.push_back(p.h);
    out.measure.push_back(m);
    if (!(m > 0.0)) zero = true;
    x.push_back(std::log(1.0 / p.h));
    y.push_back(std::log(m));
  }
  if (zero) {
    out.flags.push_back("zero nodal measure; fit rejected");
    return out;
  }
  const LinearFit f = fit_line(x, y);
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  out.fitted = true;
  return out;
}

ZeroInBallReport zero_in_ball_scan(const ScalarField &u, double h, double C_ball, const ScalarField &V, double E,
                                   double margin) {
  if (V.grid != u.grid) throw Error("zero_in_ball_scan: V and u live on different grids");
  const TorusGrid &g = u.grid;
  ZeroInBallReport rep;
  rep.radius = C_ball * h;
  if (!(rep.radius > 2.0 * g.spacing())) throw Error("zero_in_ball_scan: C_ball h must exceed two grid spacings");
  validate(BallSpec{{0.0, 0.0}, rep.radius});
  const double R = rep.radius * g.n();
  const double R2 = R * R;

  std::vector<char> forbidden(g.size()), nonneg(g.size()), nonpos(g.size());
  bool any_allowed = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    forbidden[i] = !(V.values[i] < E - margin);
    any_allowed |= !forbidden[i];
    nonneg[i] = u.values[i] >= 0.0;
    nonpos[i] = u.values[i] <= 0.0;
  }
  if (!any_allowed) {
    rep.flags.push_back("allowed region empty at this margin");
    return rep;
  }
  const auto d_forb = periodic_edt(g, forbidden);
  const auto d_pos = periodic_edt(g, nonneg);
  const auto d_neg = periodic_edt(g, nonpos);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (d_forb[i] < R2) continue;
    ++rep.admissible;
    if (!(d_pos[i] < R2 && d_neg[i] < R2)) rep.violations.push_back(g.point(i));
  }
  if (rep.admissible == 0) rep.flags.push_back("no ball of this radius fits in the allowed region");
  return rep;
}

SignSplit sign_split(const ScalarField &u, const BallSpec &ball) {
  SignSplit s;
  const auto mask = ball_mask(u.grid, ball);
  if (mask.empty()) {
    s.empty = true;
    return s;
  }
  const double dv = u.grid.cell_volume();
  for (auto i : mask) {
    const double x = u.values[i];
    if (x > 0.0) s.plus += x * dv;
    if (x < 0.0) s.minus -= x * dv;
    s.abs += std::abs(x) * dv;
    s.integral += x * dv;
  }
  return s;
}

MeanValue mean_value_ratio(const ScalarField &u, const Point &p, double r) {
  MeanValue m;
  m.split = sign_split(u, BallSpec{p, r});
  if (m.split.empty || m.split.abs == 0.0) {
    m.zero_mass = true;
    return m;
  }
  m.ratio = std::abs(m.split.integral) / m.split.abs;
  return m;
}

double nodal_length_in_ball(const NodalSet &set, const BallSpec &ball) {
  validate(ball);
  const double r2 = ball.radius * ball.radius;
  double total = 0.0;
  for (const auto &seg : set.segments) {
    const double mx = 0.5 * (seg.a[0] + seg.b[0]), my = 0.5 * (seg.a[1] + seg.b[1]);
    const double ox = periodic_delta(mx, ball.center[0]) - mx, oy = periodic_delta(my, ball.center[1]) - my;
    const double ax = seg.a[0] + ox, ay = seg.a[1] + oy;
    const double dx = seg.b[0] - seg.a[0], dy = seg.b[1] - seg.a[1];
    const double A = dx * dx + dy * dy;
    if (A == 0.0) continue;
    // |a + t d|^2 = r^2
    const double B = ax * dx + ay * dy;
    const double C = ax * ax + ay * ay - r2;
    const double disc = B * B - A * C;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double t0 = std::max(0.0, (-B - sq) / A), t1 = std::min(1.0, (-B + sq) / A);
    if (t1 > t0) total += (t1 - t0) * std::sqrt(A);
  }
  return total;
}

std::vector<Point> sample_nodal_points(const NodalSet &set, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(set.segments.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count < idx.size()) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<Point> pts;
  for (auto i : idx) {
    const auto &s = set.segments[i];
    Point p{0.5 * (s.a[0] + s.b[0]), 0.5 * (s.a[1] + s.b[1])};
    for (auto &c : p) c -= std::floor(c);
    pts.push_back(p);
  }
  return pts;
}

NodalBallSurvey nodal_ball_survey(const ScalarField &u, const NodalSet &set, double h, const NodalBallOptions &opt) {
  if (u.grid.dim() != 2) throw Error("nodal_ball_survey: 2-D fields only");
  NodalBallSurvey sv;
  sv.radius = opt.radius_factor * h;
  const auto centers = sample_nodal_points(set, opt.samples, opt.seed);
  sv.balls.resize(centers.size());
  const double dv = u.grid.cell_volume();
  parallel_for(centers.size(), [&](std::size_t k) {
    BallCheck &b = sv.balls[k];
    b.center = centers[k];
    const BallSpec ball{b.center, sv.radius};
    const auto mv = mean_value_ratio(u, b.center, sv.radius);
    b.ratio = mv.zero_mass ? 1.0 : mv.ratio;
    b.split_fraction = mv.zero_mass ? 0.0 : std::min(mv.split.plus, mv.split.minus) / mv.split.abs;
    const auto mask = ball_mask(u.grid, ball);
    std::size_t np = 0, nn = 0;
    for (auto i : mask) {
      np += u.values[i] > 0.0;
      nn += u.values[i] < 0.0;
    }
    const double small = std::min(np, nn) * dv;
    b.area_fraction = mask.empty() ? 0.0 : small / (mask.size() * dv);
    b.length = nodal_length_in_ball(set, ball);
    b.iso_bound = opt.kappa * std::sqrt(small);
    b.iso_tested = b.area_fraction >= opt.iso_area_fraction;
    b.iso_ok = !b.iso_tested || b.length >= b.iso_bound;
  });
  std::size_t split_ok = 0;
  for (const auto &b : sv.balls) {
    sv.max_ratio = std::max(sv.max_ratio, b.ratio);
    split_ok += b.split_fraction >= opt.split_threshold;
    sv.iso_tested += b.iso_tested;
    sv.iso_failures += !b.iso_ok;
  }
  sv.split_pass_fraction = sv.balls.empty() ? 0.0 : double(split_ok) / sv.balls.size();
  return sv;
}

} // namespace semilab
