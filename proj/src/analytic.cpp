#include "semilab/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "semilab/fit.hpp"
#include "semilab/parallel.hpp"
#include "semilab/spectral.hpp"

namespace semilab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOverflowCap = 1e300;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

cplx ipow(cplx z, int p) {
  cplx r = 1.0;
  for (int i = 0; i < p; ++i) r *= z;
  return r;
}

// No growth as h decreases: v is ordered by decreasing h and every entry
// stays within kBoundedSpread of the first.
bool bounded_across(const std::vector<double> &v) {
  if (v.empty()) return false;
  for (double c : v)
    if (!std::isfinite(c)) return false;
  const double ref = std::abs(v.front());
  for (double c : v)
    if (std::abs(c) > kBoundedSpread * ref + 1e-12) return false;
  return true;
}

} // namespace

std::vector<MultiIndex> multi_indices(int dim, int max_order) {
  std::vector<MultiIndex> out;
  for (int m = 1; m <= max_order; ++m) {
    if (dim == 1) {
      out.push_back({{m, 0}});
      continue;
    }
    for (int ax = m; ax >= 0; --ax) out.push_back({{ax, m - ax}});
  }
  return out;
}

ScalarField hd_derivative(const ScalarField &u, const MultiIndex &alpha, double h, double floor) {
  if (alpha.a[0] < 0 || alpha.a[1] < 0) throw Error("hd_derivative: negative multi-index");
  if (u.grid.dim() == 1 && alpha.a[1] != 0) throw Error("hd_derivative: y-order on a 1-D field");
  if (!(h > 0.0)) throw Error("hd_derivative: h must be > 0");
  const int m = alpha.order();
  if (m == 0) return u;
  const double top = kTwoPi * h * (u.grid.n() / 2);
  if (m * std::log10(std::max(top, 1.0)) > std::log10(kOverflowCap))
    throw Error("hd_derivative: (2 pi h k_Nyquist)^|alpha| = " + fmt(top) + "^" + std::to_string(m) +
                " exceeds the cap 1e300");
  Spectrum s = forward(u);
  double cmax = 0.0;
  for (const auto &c : s.coeffs) cmax = std::max(cmax, std::abs(c));
  const int n = u.grid.n();
  for (int jy = 0; jy < s.rows(); ++jy) {
    const int ky = u.grid.dim() == 2 ? frequency(jy, n) : 0;
    for (int jx = 0; jx < s.half(); ++jx) {
      cplx &c = s.at(jx, jy);
      const bool nyq = jx == n / 2 || (u.grid.dim() == 2 && jy == n / 2);
      if (nyq || std::abs(c) <= floor * cmax)
        c = 0.0;
      else
        c *= ipow(cplx(0.0, kTwoPi * h * jx), alpha.a[0]) * ipow(cplx(0.0, kTwoPi * h * ky), alpha.a[1]);
    }
  }
  return inverse(s, u.label);
}

CauchyReport cauchy_fit(const ScalarField &u, double h, int alpha_max) {
  if (alpha_max < 1) throw Error("cauchy_fit: alpha_max must be >= 1");
  CauchyReport rep;
  rep.h = h;
  const double s = u.sup_norm();
  const auto idx = multi_indices(u.grid.dim(), alpha_max);
  rep.table.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) rep.table[i].alpha = idx[i];
  if (s == 0.0) {
    rep.zero_field = true;
    return rep;
  }
  // Checks the cap once, before any work is spread out.
  hd_derivative(ScalarField(TorusGrid(u.grid.dim(), u.grid.n())), idx.back(), h);
  parallel_for(idx.size(), [&](std::size_t i) {
    rep.table[i].M = hd_derivative(u, idx[i], h, kContinuationFloor).sup_norm() / s;
  });
  double best = -1.0;
  for (const auto &row : rep.table) {
    const int m = row.alpha.order();
    const double c = std::pow(row.M, 1.0 / m) / (1.0 + h * m);
    if (c > best) {
      best = c;
      rep.argmax = row.alpha;
    }
  }
  rep.C_est = best;
  return rep;
}

GrowthReport continuation_growth(const ScalarField &u, double h, const std::vector<double> &t_list) {
  if (!(h > 0.0)) throw Error("continuation_growth: h must be > 0");
  GrowthReport rep;
  rep.h = h;
  rep.sup_norm = u.sup_norm();
  if (rep.sup_norm == 0.0) {
    rep.zero_field = true;
    rep.flags.push_back("zero field");
    return rep;
  }
  const TorusGrid &g = u.grid;
  const int n = g.n();
  const int dim = g.dim();
  const int rows = dim == 2 ? n : 1;
  const Spectrum spec = forward(u);

  // Full complex spectrum; Nyquist bins and sub-floor coefficients cleared.
  std::vector<cplx> full(g.size());
  std::vector<std::array<int, 2>> freq(g.size());
  double cmax = 0.0;
  for (int jy = 0; jy < rows; ++jy)
    for (int jx = 0; jx < n; ++jx) {
      const std::size_t i = static_cast<std::size_t>(jy) * n + jx;
      const int kx = frequency(jx, n), ky = dim == 2 ? frequency(jy, n) : 0;
      freq[i] = {kx, ky};
      if (jx == n / 2 || (dim == 2 && jy == n / 2)) continue;
      full[i] = spec.coefficient(kx, ky);
      cmax = std::max(cmax, std::abs(full[i]));
    }
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (std::abs(full[i]) <= kContinuationFloor * cmax) {
      full[i] = 0.0;
      continue;
    }
    rep.k_eff = std::max(rep.k_eff, std::hypot(freq[i][0], freq[i][1]));
  }
  const double eps_log = -std::log(std::numeric_limits<double>::epsilon());
  rep.t_limit = rep.k_eff > 0.0 ? 0.5 * h * eps_log / (kTwoPi * rep.k_eff) : std::numeric_limits<double>::infinity();

  for (double t : t_list) {
    if (!std::isfinite(t) || std::abs(t) > rep.t_limit) {
      rep.t_dropped.push_back(t);
      rep.flags.push_back("t=" + fmt(t) + " beyond the noise limit " + fmt(rep.t_limit) + "; dropped");
      continue;
    }
    rep.t_list.push_back(t);
  }
  rep.M.assign(rep.t_list.size(), 0.0);
  parallel_for(rep.t_list.size(), [&](std::size_t it) {
    const double t = rep.t_list[it];
    double best = 0.0;
    ComplexBuffer in(g.size()), out(g.size());
    for (int axis = 0; axis < dim; ++axis) {
      for (std::size_t i = 0; i < full.size(); ++i) in[i] = full[i] * std::exp(-kTwoPi * freq[i][axis] * t);
      fft::c2c(dim, n, in.data(), out.data(), +1);
      for (const auto &v : out) best = std::max(best, std::abs(v));
    }
    rep.M[it] = best;
  });

  if (rep.t_list.size() >= 2) {
    std::vector<double> y(rep.M.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::log(rep.M[i] / rep.sup_norm);
    bool distinct = false;
    for (double t : rep.t_list) distinct |= t != rep.t_list.front();
    if (distinct) {
      const LinearFit f = fit_line(rep.t_list, y);
      rep.C_growth = h * f.slope;
      rep.r2 = f.r2;
    } else {
      rep.flags.push_back("all t equal; no fit");
    }
  } else {
    rep.flags.push_back("fewer than two admissible t; no fit");
  }
  return rep;
}

double continuation_limit(const ScalarField &u, double h) { return continuation_growth(u, h, {}).t_limit; }

EquivalenceSummary equivalence_crosscheck(const DecayReport &decay, const std::vector<CauchyReport> &cauchy,
                                          const std::vector<GrowthReport> &growth) {
  for (std::size_t i = 1; i < cauchy.size(); ++i)
    if (!(cauchy[i].h < cauchy[i - 1].h)) throw Error("equivalence_crosscheck: h must be strictly decreasing");
  EquivalenceSummary s;
  s.delta = decay.delta;
  for (const auto &c : cauchy) {
    s.h.push_back(c.h);
    s.C_est.push_back(c.zero_field ? std::numeric_limits<double>::quiet_NaN() : c.C_est);
  }
  for (const auto &g : growth) s.C_growth.push_back(g.zero_field ? std::numeric_limits<double>::quiet_NaN() : g.C_growth);

  s.decay_ok = std::isfinite(decay.delta) && decay.delta > 0.0;
  s.cauchy_bounded = bounded_across(s.C_est);
  s.growth_bounded = growth.size() == cauchy.size() && bounded_across(s.C_growth);
  for (std::size_t i = 0; i < growth.size() && i < cauchy.size(); ++i)
    if (growth[i].h != cauchy[i].h) s.growth_bounded = false;

  s.pass = s.decay_ok && s.cauchy_bounded && s.growth_bounded;
  s.consistent = s.decay_ok == s.cauchy_bounded && s.cauchy_bounded == s.growth_bounded;

  s.lines.push_back("delta = " + fmt(s.delta) + (s.decay_ok ? " (decay)" : " (no decay)"));
  for (std::size_t i = 0; i < s.h.size(); ++i) {
    std::string line = "h = " + fmt(s.h[i]) + "  C_est = " + fmt(s.C_est[i]);
    if (i < s.C_growth.size()) line += "  C_growth = " + fmt(s.C_growth[i]);
    s.lines.push_back(line);
  }
  s.lines.push_back(std::string("cauchy ") + (s.cauchy_bounded ? "bounded" : "unbounded") + ", growth " +
                    (s.growth_bounded ? "bounded" : "unbounded"));
  s.lines.push_back(std::string(s.pass ? "PASS" : "FAIL") + (s.consistent ? "" : " (conditions disagree)"));
  return s;
}

} // namespace semilab
