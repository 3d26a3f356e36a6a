#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "semilab/analytic.hpp"
#include "semilab/spectral.hpp"

using namespace semilab;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField random_trig(int dim, int n, int kmax, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> N01;
  struct Term {
    int kx, ky;
    double a, b;
  };
  std::vector<Term> terms;
  for (int kx = 0; kx <= kmax; ++kx)
    for (int ky = dim == 2 ? -kmax : 0; ky <= (dim == 2 ? kmax : 0); ++ky) terms.push_back({kx, ky, N01(rng), N01(rng)});
  return sample(TorusGrid(dim, n), [&](const Point &p) {
    double s = 0;
    for (const auto &t : terms) {
      const double ph = 2 * kPi * (t.kx * p[0] + t.ky * p[1]);
      s += t.a * std::cos(ph) + t.b * std::sin(ph);
    }
    return s;
  });
}

double max_diff(const ScalarField &a, const ScalarField &b) {
  double d = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

ScalarField mode(int n, int k) {
  return sample(TorusGrid(1, n), [k](const Point &p) { return std::cos(2 * kPi * k * p[0]); });
}

EigenPair as_pair(const ScalarField &u, double h, double E) {
  EigenPair p;
  p.h = h;
  p.energy = E;
  p.field = u;
  return p;
}

} // namespace

TEST_CASE("multi-index enumeration") {
  auto one = multi_indices(1, 4);
  REQUIRE(one.size() == 4);
  CHECK(one[3].a[0] == 4);
  auto two = multi_indices(2, 3);
  CHECK(two.size() == 2 + 3 + 4);
  CHECK(two.front().order() == 1);
  CHECK(two.back().order() == 3);
}

TEST_CASE("zero order is the identity") {
  auto u = random_trig(2, 32, 4, 3);
  auto w = hd_derivative(u, MultiIndex{}, 0.1);
  CHECK(w.values == u.values);
}

TEST_CASE("first order on a single mode") {
  auto u = sample(TorusGrid(1, 64), [](const Point &p) { return std::sin(2 * kPi * p[0]); });
  for (double h : {0.3, 0.1, 0.01}) {
    auto w = hd_derivative(u, MultiIndex{{1, 0}}, h);
    double worst = 0;
    for (std::size_t i = 0; i < w.values.size(); ++i)
      worst = std::max(worst, std::abs(w.values[i] - h * 2 * kPi * std::cos(2 * kPi * u.grid.point(i)[0])));
    CHECK(worst < 1e-13);
    CHECK(w.sup_norm() == doctest::Approx(2 * kPi * h).epsilon(1e-13));
  }
}

TEST_CASE("orders compose") {
  const double h = 0.05;
  SUBCASE("1-D repeated first order") {
    auto u = random_trig(1, 128, 8, 11);
    ScalarField rep = u;
    for (int m = 1; m <= 6; ++m) {
      // Roundoff in empty bins grows like (2 pi h k)^m; the floor clears it.
      rep = hd_derivative(rep, MultiIndex{{1, 0}}, h, kContinuationFloor);
      auto direct = hd_derivative(u, MultiIndex{{m, 0}}, h, kContinuationFloor);
      CHECK(max_diff(rep, direct) < 1e-12 * std::max(1.0, direct.sup_norm()));
    }
  }
  SUBCASE("2-D alpha then beta") {
    auto u = random_trig(2, 64, 5, 12);
    const MultiIndex a{{2, 1}}, b{{1, 3}}, ab{{3, 4}};
    auto x = hd_derivative(hd_derivative(u, a, h), b, h);
    auto y = hd_derivative(hd_derivative(u, b, h), a, h);
    auto z = hd_derivative(u, ab, h);
    CHECK(max_diff(x, z) < 1e-12 * std::max(1.0, z.sup_norm()));
    CHECK(max_diff(y, z) < 1e-12 * std::max(1.0, z.sup_norm()));
  }
}

TEST_CASE("order cap") {
  auto u = random_trig(1, 1024, 3, 1);
  // 2 pi * 1 * 512 ~ 3217; 3217^86 > 1e300
  CHECK_THROWS_WITH_AS(hd_derivative(u, MultiIndex{{90, 0}}, 1.0), doctest::Contains("1e300"), Error);
  CHECK_NOTHROW(hd_derivative(u, MultiIndex{{20, 0}}, 1.0));
  CHECK_THROWS_AS(cauchy_fit(u, 1.0, 90), Error);
}

TEST_CASE("Cauchy constant of sin(2 pi x)") {
  auto u = sample(TorusGrid(1, 64), [](const Point &p) { return std::sin(2 * kPi * p[0]); });
  auto rep = cauchy_fit(u, 0.1, 10);
  REQUIRE(rep.table.size() == 10);
  for (const auto &row : rep.table)
    CHECK(row.M == doctest::Approx(std::pow(0.2 * kPi, row.alpha.order())).epsilon(1e-12));
  CHECK(std::abs(rep.C_est - 0.2 * kPi / 1.1) < 1e-10);
  CHECK(rep.argmax.a[0] == 1);
  CHECK(rep.C_est == doctest::Approx(0.5712).epsilon(1e-4));
}

TEST_CASE("Cauchy constant is scale invariant") {
  auto u = random_trig(2, 64, 4, 7);
  auto a = cauchy_fit(u, 0.1, 6);
  ScalarField v = u;
  for (auto &x : v.values) x *= -4.0;
  auto b = cauchy_fit(v, 0.1, 6);
  CHECK(b.C_est == a.C_est);
  for (auto &x : v.values) x *= 0.75;
  auto c = cauchy_fit(v, 0.1, 6);
  CHECK(c.C_est == doctest::Approx(a.C_est).epsilon(1e-13));
}

TEST_CASE("Cauchy fit flags a zero field and covers every order") {
  auto rep = cauchy_fit(ScalarField(TorusGrid(2, 32)), 0.1, 4);
  CHECK(rep.zero_field);
  CHECK(rep.table.size() == 2 + 3 + 4 + 5);
}

TEST_CASE("Cauchy constant does not depend on the grid") {
  auto u = sample(TorusGrid(2, 64),
                  [](const Point &p) { return std::exp(std::cos(2 * kPi * p[0]) + 0.5 * std::sin(2 * kPi * (p[0] - 2 * p[1]))); });
  auto a = cauchy_fit(u, 0.1, 12);
  auto b = cauchy_fit(fourier_upsample(u, 128), 0.1, 12);
  CHECK(std::abs(b.C_est / a.C_est - 1) < 0.01);
}

TEST_CASE("continuation of sin(2 pi x) is cosh") {
  auto u = sample(TorusGrid(1, 64), [](const Point &p) { return std::sin(2 * kPi * p[0]); });
  const std::vector<double> ts{0.0, 0.025, 0.05, 0.075, 0.1};
  auto rep = continuation_growth(u, 0.1, ts);
  REQUIRE(rep.M.size() == ts.size());
  CHECK(rep.k_eff == 1.0);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(std::abs(rep.M[i] / rep.M[0] - std::cosh(2 * kPi * ts[i])) < 1e-8);
  CHECK(rep.M.back() / rep.M[0] == doctest::Approx(1.2040).epsilon(1e-4));
  CHECK(rep.M[0] == rep.sup_norm);
  // Midpoint log-convexity and the maximum-principle direction.
  for (std::size_t i = 1; i + 1 < ts.size(); ++i)
    CHECK(2 * std::log(rep.M[i]) <= std::log(rep.M[i - 1]) + std::log(rep.M[i + 1]) + 1e-8);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    CHECK(rep.M[i] >= rep.M[i - 1]);
    CHECK(rep.M[i] >= rep.sup_norm);
  }
}

TEST_CASE("continuation of a real field is symmetric in t") {
  auto u = random_trig(2, 64, 4, 9);
  auto rep = continuation_growth(u, 0.2, {0.03, -0.03, 0.06, -0.06});
  REQUIRE(rep.M.size() == 4);
  CHECK(std::abs(rep.M[0] - rep.M[1]) < 1e-12 * rep.M[0]);
  CHECK(std::abs(rep.M[2] - rep.M[3]) < 1e-12 * rep.M[2]);
}

TEST_CASE("continuation drops strips beyond the noise limit") {
  auto u = mode(256, 20);
  const double h = 0.1;
  const double lim = 0.5 * h * -std::log(std::numeric_limits<double>::epsilon()) / (2 * kPi * 20);
  CHECK(continuation_limit(u, h) == doctest::Approx(lim));
  auto rep = continuation_growth(u, h, {0.0, 0.5 * lim, 2 * lim});
  CHECK(rep.t_list.size() == 2);
  REQUIRE(rep.t_dropped.size() == 1);
  CHECK(rep.t_dropped[0] == 2 * lim);
  CHECK_FALSE(rep.flags.empty());
  // Growth of a single mode: ln cosh(2 pi k t) slope over [0, lim/2].
  const double s = std::log(std::cosh(2 * kPi * 20 * 0.5 * lim)) / (0.5 * lim);
  CHECK(rep.C_growth == doctest::Approx(h * s).epsilon(1e-8));
  CHECK(continuation_growth(ScalarField(TorusGrid(1, 32)), h, {0.1}).zero_field);
}

TEST_CASE("equivalence holds for flat-torus eigenfunctions") {
  // cos(2 pi k x) with 2 pi h k fixed: eigenfunctions of -h^2 d^2 at one energy.
  std::vector<EigenPair> pairs;
  std::vector<PhaseSpaceGrid> grids;
  std::vector<CauchyReport> cauchy;
  std::vector<GrowthReport> growth;
  const double xi0 = 0.2 * kPi;
  for (auto [h, k] : {std::pair{0.1, 1}, {0.05, 2}, {0.025, 4}}) {
    auto u = mode(256, k);
    pairs.push_back(as_pair(u, h, xi0 * xi0));
    grids.push_back(decay_grid(1, h, xi0 * xi0, 0.0, 1.0));
    cauchy.push_back(cauchy_fit(u, h, kCauchyOrder1D));
    growth.push_back(continuation_growth(u, h, {0.0, 0.25 * h, 0.5 * h}));
  }
  auto s = equivalence_crosscheck(decay_scan(pairs, grids, 1.0), cauchy, growth);
  CHECK(s.decay_ok);
  CHECK(s.cauchy_bounded);
  CHECK(s.growth_bounded);
  CHECK(s.pass);
  CHECK(s.consistent);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.C_est[i] == doctest::Approx(xi0 / (1 + s.h[i])));
  CHECK(s.C_growth[0] == doctest::Approx(s.C_growth[2]).epsilon(1e-9));
  CHECK(s.lines.back().rfind("PASS", 0) == 0);
}

TEST_CASE("equivalence fails for a field that is not h-band-limited") {
  // Frequency 1/h^3, near Nyquist at the smallest h. Admissible strips are
  // t <~ h/k, where ln cosh is still quadratic, so growth only shows up as
  // h^2 k.
  std::vector<EigenPair> pairs;
  std::vector<PhaseSpaceGrid> grids;
  std::vector<CauchyReport> cauchy;
  std::vector<GrowthReport> growth;
  for (double h : {0.1, 0.05, 0.025}) {
    const int k = static_cast<int>(std::lround(1 / (h * h * h)));
    auto u = mode(131072, k);
    pairs.push_back(as_pair(u, h, 0.5));
    grids.push_back(torus_phase_grid(1, h, 2 * kPi * h * k + 3));
    cauchy.push_back(cauchy_fit(u, h, 6));
    const double lim = continuation_limit(u, h);
    growth.push_back(continuation_growth(u, h, {0.0, 0.5 * lim, lim}));
  }
  auto s = equivalence_crosscheck(decay_scan(pairs, grids, 1.0), cauchy, growth);
  CHECK_FALSE(s.cauchy_bounded);
  CHECK_FALSE(s.growth_bounded);
  CHECK_FALSE(s.decay_ok);
  CHECK_FALSE(s.pass);
  CHECK(s.consistent);
  CHECK(s.C_est[2] > 3 * s.C_est[0]);
}

TEST_CASE("equivalence rejects an unordered sweep") {
  CauchyReport a, b;
  a.h = 0.05;
  b.h = 0.1;
  CHECK_THROWS_AS(equivalence_crosscheck(DecayReport{}, {a, b}, {}), Error);
}
