#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "semilab/carleman.hpp"
#include "semilab/potential.hpp"

using namespace semilab;

namespace {

constexpr double kPi = std::numbers::pi;

CarlemanWeight bump_shell(double mu = 4.0) {
  CarlemanWeight w;
  w.center = {0.75, 0.5};
  w.r_inner = 0.3;
  w.R_outer = 0.45;
  w.A = 1.45;
  w.mu = mu;
  return w;
}

const FourierSeries &three_bump_series() {
  static const FourierSeries V(potential_eval(three_bump_potential(), TorusGrid(2, 128)), 1e-14);
  return V;
}

Point shell_point(const CarlemanWeight &w, std::mt19937 &rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double r = w.r_inner + (w.R_outer - w.r_inner) * U(rng);
  const double th = 2 * kPi * U(rng);
  Point x{w.center[0] + r * std::cos(th), w.center[1] + r * std::sin(th)};
  for (auto &c : x) c -= std::floor(c);
  return x;
}

double phi_at(const CarlemanWeight &w, Point x) { return weight_eval(w, x).phi; }

} // namespace

TEST_CASE("weight validation") {
  CarlemanWeight w = bump_shell();
  CHECK_NOTHROW(validate(w));
  w.A = 1.4;
  CHECK_THROWS_AS(validate(w), Error);
  w = bump_shell();
  w.R_outer = 0.55;
  w.A = 2;
  CHECK_THROWS_AS(validate(w), Error);
  w = bump_shell();
  w.mu = 0.5;
  CHECK_THROWS_AS(validate(w), Error);
  w = bump_shell();
  CHECK_THROWS_WITH_AS(weight_eval(w, w.center), doctest::Contains("center"), Error);
  CHECK_THROWS_AS(weight_eval(w, {0.75, 0.6}), Error);
}

TEST_CASE("psi cap matches the shell profile") {
  CarlemanWeight w = bump_shell();
  const double s = w.r_inner, d = 1e-6;
  CHECK(psi_profile(w, s) == doctest::Approx(w.A - s).epsilon(1e-14));
  CHECK((psi_profile(w, s + d) - psi_profile(w, s - d)) / (2 * d) == doctest::Approx(-1.0).epsilon(1e-8));
  const double curv = (psi_profile(w, s + 1e-4) - 2 * psi_profile(w, s) + psi_profile(w, s - 1e-4)) / 1e-8;
  // psi'' is continuous (zero) there; the stencil sees psi''' ~ 12/r_in.
  CHECK(std::abs(curv) < 12 / s * 1e-4);
  for (int i = 1; i <= 100; ++i) CHECK(psi_profile(w, s * i / 100) <= psi_profile(w, s * (i - 1) / 100));
  CHECK((psi_profile(w, 1e-3) - psi_profile(w, 0)) < 1e-9);
}

TEST_CASE("1-D weight closed form") {
  CarlemanWeight w;
  w.dim = 1;
  w.center = {0.4, 0.0};
  w.r_inner = 0.1;
  w.R_outer = 0.3;
  w.A = 1.3;
  auto j = weight_eval(w, {0.7, 0.0});
  CHECK(j.grad[0] == doctest::Approx(-std::exp(1.0)).epsilon(1e-14));
  CHECK(j.dpsi[0] == -1.0);
  CHECK(j.d2psi[0][0] == 0.0);
  auto k = weight_eval(w, {0.1, 0.0});
  CHECK(k.grad[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("weight is radial") {
  CarlemanWeight w = bump_shell(3.0);
  std::mt19937 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Point x = shell_point(w, rng);
    const double dx = periodic_delta(x[0], w.center[0]), dy = periodic_delta(x[1], w.center[1]);
    const double th = 0.37 * (t + 1);
    Point y{w.center[0] + std::cos(th) * dx - std::sin(th) * dy, w.center[1] + std::sin(th) * dx + std::cos(th) * dy};
    for (auto &c : y) c -= std::floor(c);
    CHECK(std::abs(phi_at(w, x) - phi_at(w, y)) < 1e-12 * phi_at(w, x));
  }
}

TEST_CASE("weight derivatives against finite differences") {
  CarlemanWeight w = bump_shell(2.0);
  std::mt19937 rng(8);
  const double s = 1e-5;
  for (int t = 0; t < 20; ++t) {
    Point x = shell_point(w, rng);
    // keep the stencil on the shell
    const double r = std::hypot(periodic_delta(x[0], w.center[0]), periodic_delta(x[1], w.center[1]));
    if (r < w.r_inner + 3 * s || r > w.R_outer - 3 * s) continue;
    auto j = weight_eval(w, x);
    auto at = [&](double a, double b) { return phi_at(w, {x[0] + a, x[1] + b}); };
    const double scale = j.phi * w.mu * w.mu / r;
    const Point g{(at(s, 0) - at(-s, 0)) / (2 * s), (at(0, s) - at(0, -s)) / (2 * s)};
    CHECK(std::abs(g[0] - j.grad[0]) < 1e-7 * scale);
    CHECK(std::abs(g[1] - j.grad[1]) < 1e-7 * scale);
    const double hs = 1e-4;
    auto ah = [&](double a, double b) { return phi_at(w, {x[0] + a, x[1] + b}); };
    const double hxx = (ah(hs, 0) - 2 * j.phi + ah(-hs, 0)) / (hs * hs);
    const double hyy = (ah(0, hs) - 2 * j.phi + ah(0, -hs)) / (hs * hs);
    const double hxy = (ah(hs, hs) - ah(hs, -hs) - ah(-hs, hs) + ah(-hs, -hs)) / (4 * hs * hs);
    CHECK(std::abs(hxx - j.hess[0][0]) < 1e-5 * scale);
    CHECK(std::abs(hyy - j.hess[1][1]) < 1e-5 * scale);
    CHECK(std::abs(hxy - j.hess[0][1]) < 1e-5 * scale);
    CHECK(j.hess[0][1] == j.hess[1][0]);
  }
}

TEST_CASE("conjugated symbol at characteristic and zero covectors") {
  CarlemanWeight w = bump_shell(3.0);
  std::mt19937 rng(15);
  const double E = 1.0;
  for (int t = 0; t < 10; ++t) {
    const Point x = shell_point(w, rng);
    const auto j = weight_eval(w, x);
    const double V = three_bump_series().value(x);
    const double g2 = j.grad[0] * j.grad[0] + j.grad[1] * j.grad[1];
    const double m = std::sqrt(g2 - V + E);
    const double gn = std::sqrt(g2);
    const Point xi{-j.grad[1] / gn * m, j.grad[0] / gn * m};
    auto c = conjugated_symbol(w, x, xi, V, E);
    CHECK(std::abs(c.re) < 1e-12 * g2);
    CHECK(std::abs(c.im) < 1e-12 * g2);
    CHECK_FALSE(c.has_bracket);

    auto z = conjugated_symbol(w, x, {0.0, 0.0}, V, E);
    CHECK(z.im == 0.0);
    CHECK(z.re == -g2 + V - E);

    const Point k{0.3 * m, -1.7};
    auto a = conjugated_symbol(w, x, k, V, E);
    auto b = conjugated_symbol(w, x, {-k[0], -k[1]}, V, E);
    CHECK(a.re == b.re);
    CHECK(a.im == -b.im);
  }
}

TEST_CASE("conjugated symbol against a conjugated wave packet") {
  // e^{phi/h} P e^{-phi/h} on exp(i (x-x0).xi0/h - |x-x0|^2/2h), read off at
  // x0 with a fourth-order Laplacian. Leading order in h is p_phi(x0, xi0).
  CarlemanWeight w = bump_shell(2.0);
  const double h = 1e-3, E = 1.0;
  std::mt19937 rng(23);
  std::normal_distribution<double> N(0.0, 10.0);
  for (int t = 0; t < 10; ++t) {
    const Point x0 = shell_point(w, rng);
    const double r = std::hypot(periodic_delta(x0[0], w.center[0]), periodic_delta(x0[1], w.center[1]));
    if (r < w.r_inner + 1e-3 || r > w.R_outer - 1e-3) continue;
    const Point xi0{N(rng), N(rng)};
    const double phi0 = phi_at(w, x0);
    auto wp = [&](double a, double b) {
      const Point x{x0[0] + a, x0[1] + b};
      const double F = -(phi_at(w, x) - phi0) / h - (a * a + b * b) / (2 * h);
      return std::exp(F) * std::polar(1.0, (a * xi0[0] + b * xi0[1]) / h);
    };
    const auto j0 = weight_eval(w, x0);
    // Resolve the packet's local wavelength h / |xi0 + i d phi|.
    const double s = h / (20 * (std::hypot(xi0[0], xi0[1]) + std::hypot(j0.grad[0], j0.grad[1]) + 1));
    std::complex<double> lap = 0.0;
    for (int ax = 0; ax < 2; ++ax) {
      auto f = [&](double d) { return ax == 0 ? wp(d, 0) : wp(0, d); };
      lap += (-f(2 * s) + 16.0 * f(s) - 30.0 * f(0) + 16.0 * f(-s) - f(-2 * s)) / (12 * s * s);
    }
    const double V = three_bump_series().value(x0);
    const std::complex<double> Pw = -h * h * lap + (V - E) * wp(0, 0);
    auto c = conjugated_symbol(w, x0, xi0, V, E);
    const std::complex<double> p(c.re, c.im);
    CHECK(std::abs(Pw - p) < 1e-2 * std::abs(p));
  }
}

TEST_CASE("bracket in 1-D with constant potential") {
  CarlemanWeight w;
  w.dim = 1;
  w.center = {0.5, 0.0};
  w.r_inner = 0.1;
  w.R_outer = 0.3;
  w.A = 1.5;
  w.tau = 2.0;
  w.mu = 3.0;
  for (double x : {0.2, 0.35, 0.65, 0.8})
    for (double xi : {-4.0, 0.0, 0.5, 7.0}) {
      const double psi = w.A - std::abs(x - 0.5);
      const double e = std::exp(w.mu * psi);
      const double want = 4 * w.tau * w.mu * w.mu * e * xi * xi + 4 * std::pow(w.tau, 3) * std::pow(w.mu, 4) * e * e * e;
      const double got = bracket_eval(w, {x, 0.0}, {xi, 0.0}, Point{0.0, 0.0});
      CHECK(got == doctest::Approx(want).epsilon(1e-13));
      CHECK(got > 0.0);
    }
}

TEST_CASE("bracket against a finite-difference Poisson bracket") {
  const auto &V = three_bump_series();
  const double E = 1.0, s = 1e-4;
  for (double mu : {4.0, 8.0}) {
    CarlemanWeight w = bump_shell(mu);
    std::mt19937 rng(31);
    std::normal_distribution<double> N(0.0, 1.0);
    int used = 0;
    while (used < 100) {
      const Point x = shell_point(w, rng);
      const double r = std::hypot(periodic_delta(x[0], w.center[0]), periodic_delta(x[1], w.center[1]));
      if (r < w.r_inner + 2 * s || r > w.R_outer - 2 * s) continue;
      const double scale = std::hypot(weight_eval(w, x).grad[0], weight_eval(w, x).grad[1]);
      const Point xi{scale * N(rng), scale * N(rng)};
      auto sym = [&](Point y, Point k) { return conjugated_symbol(w, y, k, V.value(y), E); };
      // Fourth-order centered differences.
      auto d4 = [](auto f, double h) { return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h); };
      double pb = 0.0;
      for (int a = 0; a < 2; ++a) {
        auto shift_x = [&](double d) { Point y = x; y[a] += d; return sym(y, xi); };
        auto shift_k = [&](double d) { Point k = xi; k[a] += d; return sym(x, k); };
        const double dre_dxi = d4([&](double d) { return shift_k(d).re; }, s * scale);
        const double dim_dxi = d4([&](double d) { return shift_k(d).im; }, s * scale);
        const double dre_dx = d4([&](double d) { return shift_x(d).re; }, s);
        const double dim_dx = d4([&](double d) { return shift_x(d).im; }, s);
        pb += dre_dxi * dim_dx - dre_dx * dim_dxi;
      }
      const double b = bracket_eval(w, x, xi, V);
      CHECK(std::abs(pb - b) < 1e-5 * std::abs(b));
      ++used;
    }
  }
}

TEST_CASE("bracket scales as tau^3 at zero covector") {
  CarlemanWeight w = bump_shell(4.0);
  std::mt19937 rng(2);
  for (int t = 0; t < 5; ++t) {
    const Point x = shell_point(w, rng);
    w.tau = 1.0;
    const double b1 = bracket_eval(w, x, {0.0, 0.0}, Point{0.0, 0.0});
    for (double tau : {2.0, 4.0}) {
      w.tau = tau;
      const double b = bracket_eval(w, x, {0.0, 0.0}, Point{0.0, 0.0});
      CHECK(std::abs(b / b1 - tau * tau * tau) < 1e-10 * tau * tau * tau);
    }
  }
}

TEST_CASE("hypoellipticity on the flat torus with E < 0") {
  // On the characteristic set xi is tangential and the bracket is
  // 4 tau^3 mu^3 e^{3 mu psi} (mu - 1/|x|) - 4 tau mu e^{mu psi} |E| / |x|,
  // so positivity needs mu * r_inner > 1.
  FourierSeries Z{ScalarField(TorusGrid(2, 32))};
  CarlemanWeight w = bump_shell();
  for (double mu : {4.0, 8.0, 16.0}) {
    w.mu = mu;
    auto s = hypoellipticity_scan(w, Z, -1.0);
    CHECK(s.samples > 0);
    CHECK(s.min_bracket > 0.0);
    const double bound = 1.0 - 1.0 / (mu * w.r_inner);
    CHECK(s.min_normalized == doctest::Approx(bound).epsilon(1e-2));
  }
  w.mu = 2.0;
  CHECK(hypoellipticity_scan(w, Z, -1.0).min_bracket < 0.0);
}

TEST_CASE("mu ladder on the three-bump potential") {
  const auto &V = three_bump_series();
  auto s = mu_sweep(bump_shell(), V, 1.0, {2.0, 4.0, 8.0, 16.0});
  CHECK(s.mu0 == 4.0);
  CHECK(s.normalized_increasing);
  for (std::size_t i = 1; i < 4; ++i) CHECK(s.scans[i].min_bracket > 0.0);
  CHECK(s.scans[3].min_normalized < 1.0);

  // Small shell from the bump: mu0 is finite but larger.
  CarlemanWeight small = bump_shell();
  small.r_inner = 0.05;
  small.R_outer = 0.2;
  small.A = 1.2;
  auto t = mu_sweep(small, V, 1.0, {4.0, 8.0, 16.0, 32.0, 48.0});
  CHECK(std::isfinite(t.mu0));
  CHECK(t.mu0 > 16.0);
  CHECK(t.normalized_increasing);
}

TEST_CASE("scan with zero tolerance misses the characteristic set") {
  CHECK_THROWS_WITH_AS(hypoellipticity_scan(bump_shell(), three_bump_series(), 1.0, 0.0), doctest::Contains("missed"), Error);
  CHECK_THROWS_AS(mu_sweep(bump_shell(), three_bump_series(), 1.0, {4.0, 2.0}), Error);
}
