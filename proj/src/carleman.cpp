#include "semilab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "semilab/parallel.hpp"

namespace semilab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Local {
  Point d{0.0, 0.0}; // periodic displacement from the center
  double r = 0.0;
};

Local displacement(const CarlemanWeight &w, const Point &x) {
  Local l;
  for (int a = 0; a < w.dim; ++a) l.d[a] = periodic_delta(x[a], w.center[a]);
  l.r = std::hypot(l.d[0], l.d[1]);
  return l;
}

double dot(const Point &a, const Point &b) { return a[0] * b[0] + a[1] * b[1]; }

double quad(const Point &a, const Mat2 &m, const Point &b) {
  return a[0] * (m[0][0] * b[0] + m[0][1] * b[1]) + a[1] * (m[1][0] * b[0] + m[1][1] * b[1]);
}

} // namespace

void validate(const CarlemanWeight &w) {
  if (w.dim != 1 && w.dim != 2) throw Error("carleman weight: dim must be 1 or 2");
  if (!(w.tau >= 1.0)) throw Error("carleman weight: tau must be >= 1");
  if (!(w.mu >= 1.0)) throw Error("carleman weight: mu must be >= 1");
  if (!(w.r_inner > 0.0 && w.R_outer > w.r_inner)) throw Error("carleman weight: need 0 < r_inner < R_outer");
  if (!(w.R_outer < 0.5)) throw Error("carleman weight: shell must fit in the fundamental domain (R_outer < 1/2)");
  if (!(w.A >= 1.0 + w.R_outer)) throw Error("carleman weight: psi >= 1 on the shell needs A >= 1 + R_outer");
}

double psi_profile(const CarlemanWeight &w, double r) {
  if (r >= w.r_inner) return w.A - r;
  const double s = w.r_inner;
  return w.A - 0.6 * s - std::pow(r, 4) / (s * s * s) + 0.6 * std::pow(r, 5) / (s * s * s * s);
}

WeightJet weight_eval(const CarlemanWeight &w, const Point &x) {
  validate(w);
  const Local l = displacement(w, x);
  if (l.r == 0.0) throw Error("weight_eval: x at the shell center has no radial direction");
  const double slack = 1e-12;
  if (l.r < w.r_inner - slack || l.r > w.R_outer + slack) throw Error("weight_eval: x is off the shell");
  WeightJet j;
  j.psi = w.A - l.r;
  const Point xh{l.d[0] / l.r, l.d[1] / l.r};
  j.dpsi = {-xh[0], -xh[1]};
  if (w.dim == 2) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) j.d2psi[a][b] = -((a == b ? 1.0 : 0.0) - xh[a] * xh[b]) / l.r;
  }
  const double e = std::exp(w.mu * j.psi);
  j.phi = w.tau * e;
  for (int a = 0; a < 2; ++a) j.grad[a] = w.tau * w.mu * e * j.dpsi[a];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      j.hess[a][b] = w.tau * e * (w.mu * w.mu * j.dpsi[a] * j.dpsi[b] + w.mu * j.d2psi[a][b]);
  return j;
}

ConjugatedSymbolValue conjugated_symbol(const CarlemanWeight &w, const Point &x, const Point &xi, double V, double E) {
  const WeightJet j = weight_eval(w, x);
  ConjugatedSymbolValue s;
  s.re = dot(xi, xi) - dot(j.grad, j.grad) + V - E;
  s.im = 2.0 * dot(xi, j.grad);
  return s;
}

namespace {

double bracket_from_jet(const CarlemanWeight &w, const WeightJet &j, const Point &xi, const Point &dV) {
  const double t = w.tau, m = w.mu;
  const double e = std::exp(m * j.psi);
  const double e3 = e * e * e;
  const double xd = dot(xi, j.dpsi);
  const double g2 = dot(j.dpsi, j.dpsi);
  return 4 * t * m * m * e * xd * xd + 4 * t * m * e * quad(xi, j.d2psi, xi) + 4 * t * t * t * std::pow(m, 4) * e3 * g2 * g2 +
         4 * t * t * t * m * m * m * e3 * quad(j.dpsi, j.d2psi, j.dpsi) - 2 * t * m * e * dot(j.dpsi, dV);
}

} // namespace

double bracket_eval(const CarlemanWeight &w, const Point &x, const Point &xi, const Point &dV) {
  return bracket_from_jet(w, weight_eval(w, x), xi, dV);
}

double bracket_eval(const CarlemanWeight &w, const Point &x, const Point &xi, const FourierSeries &V) {
  double v;
  Point g;
  V.value_gradient(x, v, g);
  return bracket_eval(w, x, xi, g);
}

ConjugatedSymbolValue symbol_with_bracket(const CarlemanWeight &w, const Point &x, const Point &xi,
                                          const FourierSeries &V, double E) {
  double v;
  Point g;
  V.value_gradient(x, v, g);
  const WeightJet j = weight_eval(w, x);
  ConjugatedSymbolValue s;
  s.re = dot(xi, xi) - dot(j.grad, j.grad) + v - E;
  s.im = 2.0 * dot(xi, j.grad);
  s.bracket = bracket_from_jet(w, j, xi, g);
  s.has_bracket = true;
  return s;
}

HypoScan hypoellipticity_scan(const CarlemanWeight &w, const FourierSeries &V, double E, double tol_char,
                              const ScanResolution &res) {
  validate(w);
  if (V.dim() != w.dim) throw Error("hypoellipticity_scan: potential and weight dimensions differ");
  if (res.radii < 2 || res.angles < 1 || res.xi_angles < 1 || !(res.xi_step > 0.0))
    throw Error("hypoellipticity_scan: bad resolution");
  if (!(tol_char >= 0.0)) throw Error("hypoellipticity_scan: tol_char must be >= 0");

  struct XPoint {
    Point x;
    WeightJet jet;
    double V;
    Point dV;
  };
  std::vector<XPoint> xs;
  const int n_ang = w.dim == 2 ? res.angles : 2;
  for (int i = 0; i < res.radii; ++i) {
    const double r = w.r_inner + (w.R_outer - w.r_inner) * i / (res.radii - 1);
    for (int a = 0; a < n_ang; ++a) {
      XPoint p;
      if (w.dim == 2) {
        const double th = 2 * kPi * a / n_ang;
        p.x = {w.center[0] + r * std::cos(th), w.center[1] + r * std::sin(th)};
      } else {
        p.x = {w.center[0] + (a == 0 ? r : -r), 0.0};
      }
      for (int k = 0; k < w.dim; ++k) p.x[k] -= std::floor(p.x[k]);
      xs.push_back(p);
    }
  }
  // Band of |xi| where p_phi can vanish: |xi|^2 = |d phi|^2 - V + E.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (auto &p : xs) {
    p.jet = weight_eval(w, p.x);
    V.value_gradient(p.x, p.V, p.dV);
    const double r2 = dot(p.jet.grad, p.jet.grad) - p.V + E;
    if (r2 > 0.0) {
      lo = std::min(lo, std::sqrt(r2));
      hi = std::max(hi, std::sqrt(r2));
    }
  }
  HypoScan out;
  out.xi_scan = 2.0 * w.tau * w.mu * std::exp(w.mu * w.A);
  std::vector<double> mags;
  if (hi > 0.0) {
    const double q = 1.0 + res.xi_step;
    const double start = lo / 1.01, stop = std::min(hi * 1.01, out.xi_scan);
    for (double m = start; m <= stop; m *= q) mags.push_back(m);
  }
  const int n_dir = w.dim == 2 ? res.xi_angles : 2;

  struct Best {
    double bracket = std::numeric_limits<double>::infinity();
    double normalized = std::numeric_limits<double>::infinity();
    Point x{}, xi{};
    std::size_t samples = 0;
  };
  std::vector<Best> best(xs.size());
  const double t3m4 = 4 * std::pow(w.tau, 3) * std::pow(w.mu, 4);
  parallel_for(xs.size(), [&](std::size_t i) {
    const XPoint &p = xs[i];
    const Point xh{-p.jet.dpsi[0], -p.jet.dpsi[1]};
    const Point xp{-xh[1], xh[0]};
    const double g2 = dot(p.jet.grad, p.jet.grad);
    Best b;
    for (int k = 0; k < n_dir; ++k) {
      Point dir;
      if (w.dim == 2) {
        const double th = 2 * kPi * k / n_dir;
        dir = {std::cos(th) * xh[0] + std::sin(th) * xp[0], std::cos(th) * xh[1] + std::sin(th) * xp[1]};
      } else {
        dir = {k == 0 ? 1.0 : -1.0, 0.0};
      }
      const double im1 = 2.0 * dot(dir, p.jet.grad);
      for (double m : mags) {
        const double re = m * m - g2 + p.V - E;
        const double im = m * im1;
        const double norm = 1.0 + m * m + g2;
        if (re * re + im * im >= tol_char * tol_char * norm * norm) continue;
        const Point xi{m * dir[0], m * dir[1]};
        const double br = bracket_from_jet(w, p.jet, xi, p.dV);
        const double nb = br / (t3m4 * std::exp(3 * w.mu * p.jet.psi));
        ++b.samples;
        if (br < b.bracket) {
          b.bracket = br;
          b.x = p.x;
          b.xi = xi;
        }
        b.normalized = std::min(b.normalized, nb);
      }
    }
    best[i] = b;
  });
  out.scanned = xs.size() * mags.size() * n_dir;
  out.min_bracket = std::numeric_limits<double>::infinity();
  out.min_normalized = std::numeric_limits<double>::infinity();
  for (const auto &b : best) {
    out.samples += b.samples;
    if (b.bracket < out.min_bracket) {
      out.min_bracket = b.bracket;
      out.argmin_x = b.x;
      out.argmin_xi = b.xi;
    }
    out.min_normalized = std::min(out.min_normalized, b.normalized);
  }
  if (out.samples == 0) throw Error("hypoellipticity_scan: characteristic set missed; refine scan or enlarge tol_char");
  return out;
}

MuSweep mu_sweep(const CarlemanWeight &base, const FourierSeries &V, double E, const std::vector<double> &mus,
                 double tol_char, const ScanResolution &res) {
  MuSweep s;
  s.mu = mus;
  for (std::size_t i = 1; i < mus.size(); ++i)
    if (!(mus[i] > mus[i - 1])) throw Error("mu_sweep: mu ladder must be increasing");
  for (double m : mus) {
    CarlemanWeight w = base;
    w.mu = m;
    s.scans.push_back(hypoellipticity_scan(w, V, E, tol_char, res));
  }
  s.mu0 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = mus.size(); i-- > 0;) {
    if (!(s.scans[i].min_bracket > 0.0)) break;
    s.mu0 = mus[i];
  }
  s.normalized_increasing = !mus.empty();
  for (std::size_t i = 1; i < mus.size(); ++i)
    if (!(s.scans[i].min_normalized > s.scans[i - 1].min_normalized)) s.normalized_increasing = false;
  return s;
}

} // namespace semilab
