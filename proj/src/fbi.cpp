#include "semilab/fbi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "semilab/fit.hpp"
#include "semilab/parallel.hpp"
#include "semilab/spectral.hpp"

namespace semilab {

namespace {

constexpr double kPi = std::numbers::pi;
// -ln(1e-16)
constexpr double kLogFloor = 36.841361487904734;

std::vector<double> uniform_axis(double lo, double hi, double step) {
  const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / step - 1e-12)));
  std::vector<double> a(m + 1);
  for (int i = 0; i <= m; ++i) a[i] = lo + (hi - lo) * i / m;
  return a;
}

std::vector<double> symmetric_axis(double half, double step) {
  const int m = std::max(1, static_cast<int>(std::ceil(half / step - 1e-12)));
  std::vector<double> a(2 * m + 1);
  for (int i = -m; i <= m; ++i) a[i + m] = half * i / m;
  return a;
}

// Complex Fourier coefficients (normalized 1/N) in FFT bin order.
ComplexBuffer full_spectrum(const TorusGrid &g, const std::vector<cplx> &u) {
  ComplexBuffer in(u.begin(), u.end()), out(u.size());
  fft::c2c(g.dim(), g.n(), in.data(), out.data(), -1);
  const double s = 1.0 / static_cast<double>(g.size());
  for (auto &c : out) c *= s;
  return out;
}

std::vector<cplx> to_complex(const ScalarField &u) { return {u.values.begin(), u.values.end()}; }

// Band-limited interpolation of complex samples onto n_new points per axis.
std::vector<cplx> upsample_complex(const TorusGrid &g, const std::vector<cplx> &u, int n_new) {
  ScalarField re(g), im(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    re.values[i] = u[i].real();
    im.values[i] = u[i].imag();
  }
  auto R = fourier_upsample(re, n_new);
  auto I = fourier_upsample(im, n_new);
  std::vector<cplx> out(R.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {R.values[i], I.values[i]};
  return out;
}

// Per-axis quadrature layout: the global y indices that any x can reach and,
// for every x, the sub-range with its Gaussian weights.
struct AxisKernel {
  long j0 = 0;                // first global index
  std::vector<double> y;      // y of global index j0 + t
  std::vector<long> first;    // per x, offset into y
  std::vector<std::vector<double>> weight;  // per x, Gaussian weights
};

AxisKernel axis_kernel(const std::vector<double> &xs, int n_fine, double h, bool windowed,
                       const Window &w) {
  const double L = fbi_reach(h);
  AxisKernel k;
  long lo, hi;
  if (windowed) {
    lo = static_cast<long>(std::ceil(w.support_lo * n_fine));
    hi = static_cast<long>(std::floor(w.support_hi * n_fine));
  } else {
    lo = static_cast<long>(std::floor((xs.front() - L) * n_fine));
    hi = static_cast<long>(std::ceil((xs.back() + L) * n_fine));
  }
  k.j0 = lo;
  for (long j = lo; j <= hi; ++j) k.y.push_back(static_cast<double>(j) / n_fine);
  for (double x : xs) {
    long a = std::max(lo, static_cast<long>(std::ceil((x - L) * n_fine)));
    long b = std::min(hi, static_cast<long>(std::floor((x + L) * n_fine)));
    std::vector<double> wt;
    if (b < a) {
      k.first.push_back(0);
      k.weight.push_back({});
      continue;
    }
    for (long j = a; j <= b; ++j) {
      const double d = static_cast<double>(j) / n_fine - x;
      wt.push_back(std::exp(-d * d / (2.0 * h)));
    }
    k.first.push_back(a - lo);
    k.weight.push_back(std::move(wt));
  }
  return k;
}

long wrap(long j, int n) { return ((j % n) + n) % n; }

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

} // namespace

double Window::operator()(double t) const {
  if (t <= support_lo || t >= support_hi) return 0.0;
  if (t >= flat_lo && t <= flat_hi) return 1.0;
  const double s = t < flat_lo ? (t - support_lo) / (flat_lo - support_lo) : (support_hi - t) / (support_hi - flat_hi);
  return 0.5 * (1.0 - std::cos(kPi * s));
}

double Window::operator()(const Point &p, int dim) const {
  double v = (*this)(p[0]);
  if (dim == 2) v *= (*this)(p[1]);
  return v;
}

std::size_t PhaseSpaceGrid::x_count() const {
  return dim == 1 ? x_axis.size() : x_axis.size() * x_axis.size();
}
std::size_t PhaseSpaceGrid::xi_count() const {
  return dim == 1 ? xi_axis.size() : xi_axis.size() * xi_axis.size();
}
Point PhaseSpaceGrid::x_point(std::size_t i) const {
  if (dim == 1) return {x_axis[i], 0.0};
  return {x_axis[i % x_axis.size()], x_axis[i / x_axis.size()]};
}
Point PhaseSpaceGrid::xi_point(std::size_t j) const {
  if (dim == 1) return {xi_axis[j], 0.0};
  return {xi_axis[j % xi_axis.size()], xi_axis[j / xi_axis.size()]};
}
std::vector<Point> PhaseSpaceGrid::x_points() const {
  std::vector<Point> v(x_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x_point(i);
  return v;
}
std::vector<Point> PhaseSpaceGrid::xi_points() const {
  std::vector<Point> v(xi_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xi_point(i);
  return v;
}
double PhaseSpaceGrid::xi_max() const {
  double m = 0.0;
  for (double v : xi_axis) m = std::max(m, std::abs(v));
  return m;
}

double fbi_normalization(int dim, double h) {
  return std::pow(2.0, -0.5 * dim) * std::pow(kPi * h, -0.75 * dim);
}

double fbi_reach(double h) { return std::sqrt(2.0 * h * kLogFloor); }

PhaseSpaceGrid make_phase_grid(int dim, double h_fbi, double x_lo, double x_hi, double xi_max,
                               double step) {
  if (dim != 1 && dim != 2) throw Error("phase grid: dim must be 1 or 2");
  if (!(h_fbi > 0.0)) throw Error("phase grid: h must be > 0");
  if (!(x_hi > x_lo) || !(xi_max > 0.0)) throw Error("phase grid: empty range");
  if (step <= 0.0) step = std::sqrt(h_fbi) / 4.0;
  PhaseSpaceGrid pg;
  pg.dim = dim;
  pg.h_fbi = h_fbi;
  pg.x_axis = uniform_axis(x_lo, x_hi, step);
  pg.xi_axis = symmetric_axis(xi_max, step);
  return pg;
}

PhaseSpaceGrid window_phase_grid(int dim, double h_fbi, double xi_max, const Window &w, double step) {
  const double L = fbi_reach(h_fbi);
  return make_phase_grid(dim, h_fbi, w.support_lo - L, w.support_hi + L, xi_max, step);
}

PhaseSpaceGrid torus_phase_grid(int dim, double h_fbi, double xi_max) {
  const int m = next_pow2(static_cast<int>(std::ceil(4.0 / std::sqrt(h_fbi))), 32);
  PhaseSpaceGrid pg = make_phase_grid(dim, h_fbi, 0.0, 1.0, xi_max);
  pg.x_axis.resize(m);
  for (int j = 0; j < m; ++j) pg.x_axis[j] = static_cast<double>(j) / m;
  return pg;
}

PhaseSpaceField fbi_forward(const ScalarField &u, const PhaseSpaceGrid &pg, const std::optional<Window> &window) {
  return fbi_forward(u.grid, to_complex(u), pg, window);
}

PhaseSpaceField fbi_forward(const TorusGrid &grid, const std::vector<cplx> &u, const PhaseSpaceGrid &pg,
                            const std::optional<Window> &window) {
  if (grid.dim() != pg.dim) throw Error("fbi_forward: field and phase grid dimensions differ");
  if (u.size() != grid.size()) throw Error("fbi_forward: sample count does not match grid");
  const double h = pg.h_fbi;
  const int dim = grid.dim();
  const double step = h / (8.0 * (pg.xi_max() + 1.0));
  const int need = static_cast<int>(std::min(std::ceil(1.0 / step), 1e9));
  const int n_fine = next_pow2(need, grid.n());
  const double total = std::pow(static_cast<double>(n_fine), dim);
  if (total > static_cast<double>(kFbiMemoryCap))
    throw Error("fbi_forward: oscillation needs quadrature step " + std::to_string(step) + " (" +
                std::to_string(n_fine) + " points per axis), above the memory cap");

  TorusGrid fine(dim, n_fine);
  std::vector<cplx> f = upsample_complex(grid, u, n_fine);
  const bool windowed = window.has_value();
  const Window w = window.value_or(Window{});
  if (windowed)
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= w(fine.point(i), dim);

  PhaseSpaceField F{pg, std::vector<cplx>(pg.x_count() * pg.xi_count()), fbi_normalization(dim, h)};
  const AxisKernel K = axis_kernel(pg.x_axis, n_fine, h, windowed, w);
  const std::size_t nx = pg.x_axis.size(), nxi = pg.xi_axis.size(), ny = K.y.size();
  const double dy = 1.0 / n_fine;
  const double pref = F.normalization * std::pow(dy, dim);

  if (dim == 1) {
    std::vector<cplx> fy(ny);
    for (std::size_t t = 0; t < ny; ++t) fy[t] = f[wrap(K.j0 + static_cast<long>(t), n_fine)];
    parallel_for(nxi, [&](std::size_t a) {
      const double xi = pg.xi_axis[a];
      std::vector<cplx> ph(ny);
      for (std::size_t t = 0; t < ny; ++t) ph[t] = std::polar(1.0, -K.y[t] * xi / h) * fy[t];
      for (std::size_t ix = 0; ix < nx; ++ix) {
        cplx s = 0.0;
        const auto &wt = K.weight[ix];
        const cplx *p = ph.data() + K.first[ix];
        for (std::size_t t = 0; t < wt.size(); ++t) s += wt[t] * p[t];
        F.at(ix, a) = pref * std::polar(1.0, pg.x_axis[ix] * xi / h) * s;
      }
    });
    return F;
  }

  // 2-D: contract y2 for each xi2, then y1 for each xi1.
  std::vector<cplx> fy(ny * ny);
  for (std::size_t t2 = 0; t2 < ny; ++t2)
    for (std::size_t t1 = 0; t1 < ny; ++t1)
      fy[t2 * ny + t1] = f[fine.index(static_cast<int>(wrap(K.j0 + static_cast<long>(t1), n_fine)),
                                       static_cast<int>(wrap(K.j0 + static_cast<long>(t2), n_fine)))];
  std::vector<cplx> ph_axis(nxi * ny);
  for (std::size_t a = 0; a < nxi; ++a)
    for (std::size_t t = 0; t < ny; ++t) ph_axis[a * ny + t] = std::polar(1.0, -K.y[t] * pg.xi_axis[a] / h);
  parallel_for(nxi, [&](std::size_t a2) {
    const cplx *p2 = ph_axis.data() + a2 * ny;
    // A[x2][t1]
    std::vector<cplx> A(nx * ny, 0.0);
    for (std::size_t ix2 = 0; ix2 < nx; ++ix2) {
      const auto &wt = K.weight[ix2];
      const std::size_t o = K.first[ix2];
      for (std::size_t s = 0; s < wt.size(); ++s) {
        const cplx c = wt[s] * p2[o + s];
        const cplx *row = fy.data() + (o + s) * ny;
        cplx *dst = A.data() + ix2 * ny;
        for (std::size_t t1 = 0; t1 < ny; ++t1) dst[t1] += c * row[t1];
      }
    }
    for (std::size_t a1 = 0; a1 < nxi; ++a1) {
      const cplx *p1 = ph_axis.data() + a1 * ny;
      const std::size_t ixi = a2 * nxi + a1;
      for (std::size_t ix1 = 0; ix1 < nx; ++ix1) {
        const auto &wt = K.weight[ix1];
        const std::size_t o = K.first[ix1];
        std::vector<cplx> q(wt.size());
        for (std::size_t s = 0; s < wt.size(); ++s) q[s] = wt[s] * p1[o + s];
        for (std::size_t ix2 = 0; ix2 < nx; ++ix2) {
          const cplx *arow = A.data() + ix2 * ny + o;
          cplx s = 0.0;
          for (std::size_t t = 0; t < q.size(); ++t) s += q[t] * arow[t];
          const double phase = (pg.x_axis[ix1] * pg.xi_axis[a1] + pg.x_axis[ix2] * pg.xi_axis[a2]) / h;
          F.at(ix2 * nx + ix1, ixi) = pref * std::polar(1.0, phase) * s;
        }
      }
    }
  });
  return F;
}

namespace {

// Visits T u(., xi) on the torus x-lattice for every xi index accepted by
// `keep`; `visit(ixi, values)` receives the m^dim samples in lattice order.
template <class Keep, class Visit>
void periodic_transform(const TorusGrid &grid, const std::vector<cplx> &u, const PhaseSpaceGrid &pg, Keep keep,
                        Visit visit) {
  const int dim = grid.dim();
  if (pg.dim != dim) throw Error("fbi_periodic: dimension mismatch");
  const int m = static_cast<int>(pg.x_axis.size());
  if (!is_pow2(m) || std::abs(pg.x_axis[0]) > 0.0 || std::abs(pg.x_axis[1] - 1.0 / m) > 1e-15)
    throw Error("fbi_periodic: x lattice must be the torus lattice j/m");
  const double h = pg.h_fbi;
  const int n = grid.n();
  ComplexBuffer spec = full_spectrum(grid, u);
  const double pref = fbi_normalization(dim, h) * std::pow(2.0 * kPi * h, 0.5 * dim);
  const double reach = std::sqrt(2.0 * h * (kLogFloor + 8.0));
  const std::size_t mm = dim == 1 ? m : static_cast<std::size_t>(m) * m;
  const int kmax = n / 2 - 1;

  parallel_for(pg.xi_count(), [&](std::size_t ixi) {
    if (!keep(ixi)) return;
    const Point xi = pg.xi_point(ixi);
    auto krange = [&](double c, int &lo, int &hi) {
      lo = std::max(-kmax, static_cast<int>(std::ceil((c - reach) / (2.0 * kPi * h))));
      hi = std::min(kmax, static_cast<int>(std::floor((c + reach) / (2.0 * kPi * h))));
    };
    int lx, hx, ly = 0, hy = 0;
    krange(xi[0], lx, hx);
    if (dim == 2) krange(xi[1], ly, hy);
    ComplexBuffer D(mm, 0.0), out(mm);
    for (int ky = ly; ky <= hy; ++ky) {
      const double gy = dim == 2 ? std::exp(-std::pow(xi[1] - 2.0 * kPi * h * ky, 2) / (2.0 * h)) : 1.0;
      const int jy = ky < 0 ? ky + n : ky;
      const int my = static_cast<int>(wrap(ky, m));
      for (int kx = lx; kx <= hx; ++kx) {
        const double gx = std::exp(-std::pow(xi[0] - 2.0 * kPi * h * kx, 2) / (2.0 * h));
        const int jx = kx < 0 ? kx + n : kx;
        const cplx c = spec[dim == 2 ? static_cast<std::size_t>(jy) * n + jx : jx];
        D[static_cast<std::size_t>(my) * (dim == 2 ? m : 0) + wrap(kx, m)] += c * (gx * gy);
      }
    }
    fft::c2c(dim, m, D.data(), out.data(), +1);
    std::vector<cplx> vals(mm);
    for (std::size_t i = 0; i < mm; ++i) vals[i] = pref * out[i];
    visit(ixi, vals);
  });
}

} // namespace

PhaseSpaceField fbi_periodic(const ScalarField &u, const PhaseSpaceGrid &pg) {
  return fbi_periodic(u.grid, to_complex(u), pg);
}

PhaseSpaceField fbi_periodic(const TorusGrid &grid, const std::vector<cplx> &u, const PhaseSpaceGrid &pg) {
  PhaseSpaceField F{pg, std::vector<cplx>(pg.x_count() * pg.xi_count()), fbi_normalization(grid.dim(), pg.h_fbi)};
  periodic_transform(
      grid, u, pg, [](std::size_t) { return true; },
      [&](std::size_t ixi, const std::vector<cplx> &vals) {
        for (std::size_t ix = 0; ix < vals.size(); ++ix) F.at(ix, ixi) = vals[ix];
      });
  return F;
}

double boundary_mass_fraction(const PhaseSpaceField &F) {
  const auto &pg = F.grid;
  const std::size_t nx = pg.x_axis.size(), nxi = pg.xi_axis.size();
  auto edge = [](std::size_t i, std::size_t n) { return i == 0 || i + 1 == n; };
  double tot = 0.0, bnd = 0.0;
  for (std::size_t ix = 0; ix < pg.x_count(); ++ix)
    for (std::size_t ixi = 0; ixi < pg.xi_count(); ++ixi) {
      const double v = std::norm(F.at(ix, ixi));
      tot += v;
      bool b = edge(ixi % nxi, nxi) || edge(ix % nx, nx);
      if (pg.dim == 2) b = b || edge(ixi / nxi, nxi) || edge(ix / nx, nx);
      if (b) bnd += v;
    }
  return tot > 0.0 ? bnd / tot : 0.0;
}

std::vector<cplx> fbi_adjoint_complex(const PhaseSpaceField &F, const TorusGrid &target) {
  const auto &pg = F.grid;
  if (pg.dim != target.dim()) throw Error("fbi_adjoint: dimension mismatch");
  const std::size_t nx = pg.x_axis.size(), nxi = pg.xi_axis.size();
  {
    double tot = 0.0, edge = 0.0;
    for (std::size_t ix = 0; ix < pg.x_count(); ++ix)
      for (std::size_t ixi = 0; ixi < pg.xi_count(); ++ixi) {
        const double v = std::norm(F.at(ix, ixi));
        tot += v;
        const std::size_t a1 = ixi % nxi, a2 = ixi / nxi;
        bool e = a1 == 0 || a1 + 1 == nxi;
        if (pg.dim == 2) e = e || a2 == 0 || a2 + 1 == nxi;
        if (e) edge += v;
      }
    if (tot > 0.0 && edge > kAdjointEdgeLimit * tot)
      throw Error("fbi_adjoint: xi range too small, truncation mass " + format_sci(edge / tot));
  }
  const double h = pg.h_fbi;
  const int n = target.n();
  const double pref = fbi_normalization(pg.dim, h) * std::pow(pg.dx() * pg.dxi(), pg.dim);
  // G[y][x] = exp(-(x - y)^2 / 2h)
  std::vector<double> G(static_cast<std::size_t>(n) * nx);
  for (int iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double d = pg.x_axis[ix] - static_cast<double>(iy) / n;
      G[iy * nx + ix] = std::exp(-d * d / (2.0 * h));
    }
  std::vector<cplx> out(target.size(), 0.0);
  if (pg.dim == 1) {
    std::vector<std::vector<cplx>> part(nxi, std::vector<cplx>(n));
    parallel_for(nxi, [&](std::size_t a) {
      const double xi = pg.xi_axis[a];
      std::vector<cplx> w(nx);
      for (std::size_t ix = 0; ix < nx; ++ix) w[ix] = std::polar(1.0, -pg.x_axis[ix] * xi / h) * F.at(ix, a);
      for (int iy = 0; iy < n; ++iy) {
        cplx s = 0.0;
        for (std::size_t ix = 0; ix < nx; ++ix) s += G[iy * nx + ix] * w[ix];
        part[a][iy] = std::polar(1.0, static_cast<double>(iy) / n * xi / h) * s;
      }
    });
    for (std::size_t a = 0; a < nxi; ++a)
      for (int iy = 0; iy < n; ++iy) out[iy] += part[a][iy];
  } else {
    std::vector<std::vector<cplx>> part(nxi, std::vector<cplx>(target.size(), 0.0));
    parallel_for(nxi, [&](std::size_t a2) {
      std::vector<cplx> W(nx * nx), B(static_cast<std::size_t>(n) * nx);
      for (std::size_t a1 = 0; a1 < nxi; ++a1) {
        const std::size_t ixi = a2 * nxi + a1;
        const double x1i = pg.xi_axis[a1], x2i = pg.xi_axis[a2];
        for (std::size_t ix2 = 0; ix2 < nx; ++ix2)
          for (std::size_t ix1 = 0; ix1 < nx; ++ix1)
            W[ix2 * nx + ix1] = std::polar(1.0, -(pg.x_axis[ix1] * x1i + pg.x_axis[ix2] * x2i) / h) *
                                F.at(ix2 * nx + ix1, ixi);
        // B[y1][x2] = sum_x1 G[y1][x1] W[x2][x1]
        for (int iy1 = 0; iy1 < n; ++iy1)
          for (std::size_t ix2 = 0; ix2 < nx; ++ix2) {
            cplx s = 0.0;
            for (std::size_t ix1 = 0; ix1 < nx; ++ix1) s += G[iy1 * nx + ix1] * W[ix2 * nx + ix1];
            B[iy1 * nx + ix2] = s;
          }
        for (int iy2 = 0; iy2 < n; ++iy2)
          for (int iy1 = 0; iy1 < n; ++iy1) {
            cplx s = 0.0;
            for (std::size_t ix2 = 0; ix2 < nx; ++ix2) s += G[iy2 * nx + ix2] * B[iy1 * nx + ix2];
            const double phase = (static_cast<double>(iy1) * x1i + static_cast<double>(iy2) * x2i) / (n * h);
            part[a2][target.index(iy1, iy2)] += std::polar(1.0, phase) * s;
          }
      }
    });
    for (std::size_t a = 0; a < nxi; ++a)
      for (std::size_t i = 0; i < target.size(); ++i) out[i] += part[a][i];
  }
  for (auto &v : out) v *= pref;
  return out;
}

ScalarField fbi_adjoint(const PhaseSpaceField &F, const TorusGrid &target) {
  auto c = fbi_adjoint_complex(F, target);
  ScalarField out(target, "adjoint");
  for (std::size_t i = 0; i < c.size(); ++i) out.values[i] = c[i].real();
  return out;
}

IsometryReport isometry_defect(const ScalarField &u, const PhaseSpaceGrid &pg, const Window &w) {
  IsometryReport rep;
  ScalarField cu = u;
  for (std::size_t i = 0; i < cu.values.size(); ++i) cu.values[i] *= w(u.grid.point(i), u.grid.dim());
  const double nu = cu.l2_norm();
  if (nu == 0.0) {
    rep.zero_norm = true;
    return rep;
  }
  auto F = fbi_forward(u, pg, w);
  double s = 0.0;
  for (const auto &v : F.values) s += std::norm(v);
  const double cell = std::pow(pg.dx() * pg.dxi(), pg.dim);
  const double nF = std::sqrt(s * cell);
  rep.defect = std::abs(nF - nu) / nu;
  rep.tail = boundary_mass_fraction(F) * s * cell / (nu * nu);
  return rep;
}

double holomorphy_residual(const PhaseSpaceField &F) {
  const auto &pg = F.grid;
  const double h = pg.h_fbi;
  const std::size_t nx = pg.x_axis.size(), nxi = pg.xi_axis.size();
  if (nx < 5 || nxi < 5) throw Error("holomorphy_residual: lattice too small for the stencil");
  const double dx = pg.dx(), dxi = pg.dxi();
  auto d4 = [](cplx m2, cplx m1, cplx p1, cplx p2, double step) {
    return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step);
  };
  double res = 0.0, norm = 0.0;
  auto interior = [](std::size_t i, std::size_t n) { return i >= 2 && i + 2 < n; };
  for (std::size_t ix = 0; ix < pg.x_count(); ++ix) {
    const std::size_t x1 = ix % nx, x2 = ix / nx;
    if (!interior(x1, nx) || (pg.dim == 2 && !interior(x2, nx))) continue;
    for (std::size_t ixi = 0; ixi < pg.xi_count(); ++ixi) {
      const std::size_t a1 = ixi % nxi, a2 = ixi / nxi;
      if (!interior(a1, nxi) || (pg.dim == 2 && !interior(a2, nxi))) continue;
      const cplx f = F.at(ix, ixi);
      norm += std::norm(f);
      for (int ax = 0; ax < pg.dim; ++ax) {
        const std::size_t sx = ax == 0 ? 1 : nx, sxi = ax == 0 ? 1 : nxi;
        const cplx fx = d4(F.at(ix - 2 * sx, ixi), F.at(ix - sx, ixi), F.at(ix + sx, ixi), F.at(ix + 2 * sx, ixi), dx);
        const cplx fxi =
            d4(F.at(ix, ixi - 2 * sxi), F.at(ix, ixi - sxi), F.at(ix, ixi + sxi), F.at(ix, ixi + 2 * sxi), dxi);
        const double xi = pg.xi_axis[ax == 0 ? a1 : a2];
        // h D_x F - (xi + i h D_xi) F with D = -i d
        const cplx r = cplx(0.0, -h) * fx - xi * f - h * fxi;
        res += std::norm(r);
      }
    }
  }
  return norm > 0.0 ? std::sqrt(res / norm) : 0.0;
}

PhaseSpaceGrid decay_grid(int dim, double h, double E, double vmin, double C0) {
  if (!(C0 * C0 > E - vmin))
    throw Error("decay_grid: C0^2 must exceed E - min V (the threshold has to sit outside the energy shell)");
  const double xi_max = std::max(2.0 * std::sqrt(std::max(E - vmin, 1.0)), C0 + 1.0);
  return torus_phase_grid(dim, h, xi_max);
}

DecayReport decay_scan(const std::vector<EigenPair> &pairs, const std::vector<PhaseSpaceGrid> &grids, double C0) {
  if (pairs.size() != grids.size()) throw Error("decay_scan: one phase grid per eigenpair");
  if (pairs.size() < 3) throw Error("decay_scan: fit requires >= 3 points");
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pairs[a].h > pairs[b].h; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (!(pairs[order[i]].h < pairs[order[i - 1]].h)) throw Error("decay_scan: h values must be distinct");

  DecayReport rep;
  rep.xi_threshold = C0;
  std::vector<double> xs, ys;
  for (auto i : order) {
    const auto &p = pairs[i];
    const auto &pg = grids[i];
    if (std::abs(pg.h_fbi - p.h) > 1e-15 * p.h) rep.flags.push_back("h_fbi differs from h at h=" + std::to_string(p.h));
    std::vector<double> best(pg.xi_count(), 0.0);
    periodic_transform(
        p.field.grid, to_complex(p.field), pg,
        [&](std::size_t ixi) {
          const Point xi = pg.xi_point(ixi);
          return std::hypot(xi[0], xi[1]) >= C0;
        },
        [&](std::size_t ixi, const std::vector<cplx> &vals) {
          double m = 0.0;
          for (const auto &v : vals) m = std::max(m, std::abs(v));
          best[ixi] = m;
        });
    DecayRow row;
    row.h = p.h;
    row.sup = *std::max_element(best.begin(), best.end());
    row.sup_norm = p.field.sup_norm();
    row.ratio = row.sup_norm > 0.0 ? row.sup / row.sup_norm : 0.0;
    if (!(row.ratio > kDecayFloor)) {
      row.dropped = true;
      rep.flags.push_back("sup below floating-point floor at h=" + std::to_string(p.h) + "; dropped from fit");
    } else {
      xs.push_back(1.0 / p.h);
      ys.push_back(std::log(row.ratio));
    }
    rep.table.push_back(row);
  }
  if (xs.size() < 2) {
    rep.flags.push_back("fewer than two points above the floor; no fit");
    rep.delta = std::nan("");
    return rep;
  }
  auto f = fit_line(xs, ys);
  rep.delta = -f.slope;
  rep.log_C1 = f.intercept;
  rep.r2 = f.r2;
  return rep;
}

} // namespace semilab
