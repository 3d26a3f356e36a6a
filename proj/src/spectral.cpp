#include "semilab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace semilab {

void *fftw_aligned_alloc(std::size_t bytes) {
  void *p = fftw_malloc(std::max<std::size_t>(bytes, 16));
  if (!p) throw std::bad_alloc();
  return p;
}

void fftw_aligned_free(void *p) { fftw_free(p); }

namespace {

enum class Kind { R2C, C2R, C2C_FWD, C2C_BWD };

struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, Kind>, fftw_plan> plans;

  ~PlanCache() {
    for (auto &kv : plans) fftw_destroy_plan(kv.second);
  }

  fftw_plan get(int dim, int n, Kind kind) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(dim, n, kind);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    const std::size_t total = dim == 1 ? n : static_cast<std::size_t>(n) * n;
    fftw_plan p = nullptr;
    auto *r = static_cast<double *>(fftw_malloc(sizeof(double) * total));
    auto *c = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * total));
    auto *c2 = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * total));
    const unsigned flags = FFTW_ESTIMATE;
    switch (kind) {
    case Kind::R2C:
      p = dim == 1 ? fftw_plan_dft_r2c_1d(n, r, c, flags) : fftw_plan_dft_r2c_2d(n, n, r, c, flags);
      break;
    case Kind::C2R:
      p = dim == 1 ? fftw_plan_dft_c2r_1d(n, c, r, flags) : fftw_plan_dft_c2r_2d(n, n, c, r, flags);
      break;
    case Kind::C2C_FWD:
    case Kind::C2C_BWD: {
      const int sign = kind == Kind::C2C_FWD ? FFTW_FORWARD : FFTW_BACKWARD;
      p = dim == 1 ? fftw_plan_dft_1d(n, c, c2, sign, flags) : fftw_plan_dft_2d(n, n, c, c2, sign, flags);
      break;
    }
    }
    fftw_free(r);
    fftw_free(c);
    fftw_free(c2);
    if (!p) throw Error("FFTW plan creation failed");
    plans.emplace(key, p);
    return p;
  }
};

PlanCache &cache() {
  static PlanCache c;
  return c;
}

fftw_complex *as_fftw(cplx *p) { return reinterpret_cast<fftw_complex *>(p); }

} // namespace

namespace fft {

void r2c(int dim, int n, const double *in, cplx *out) {
  fftw_execute_dft_r2c(cache().get(dim, n, Kind::R2C), const_cast<double *>(in), as_fftw(out));
}

void c2r(int dim, int n, cplx *in, double *out) {
  fftw_execute_dft_c2r(cache().get(dim, n, Kind::C2R), as_fftw(in), out);
}

void c2c(int dim, int n, cplx *in, cplx *out, int sign) {
  fftw_execute_dft(cache().get(dim, n, sign < 0 ? Kind::C2C_FWD : Kind::C2C_BWD), as_fftw(in),
                   as_fftw(out));
}

} // namespace fft

Spectrum::Spectrum(TorusGrid g)
    : grid(g), coeffs(static_cast<std::size_t>(g.dim() == 2 ? g.n() : 1) * (g.n() / 2 + 1)) {}

cplx Spectrum::coefficient(int kx, int ky) const {
  const int n = grid.n();
  if (grid.dim() == 1) ky = 0;
  bool conj = false;
  if (kx < 0) {
    kx = -kx;
    ky = -ky;
    conj = true;
  }
  const int jy = grid.dim() == 2 ? ((ky % n) + n) % n : 0;
  const cplx c = at(kx, jy);
  return conj ? std::conj(c) : c;
}

Spectrum forward(const ScalarField &u) {
  Spectrum s(u.grid);
  RealBuffer in(u.values.begin(), u.values.end());
  fft::r2c(u.grid.dim(), u.grid.n(), in.data(), s.coeffs.data());
  const double scale = 1.0 / static_cast<double>(u.grid.size());
  for (auto &c : s.coeffs) c *= scale;
  return s;
}

ScalarField inverse(const Spectrum &s, std::string label) {
  ComplexBuffer work(s.coeffs.begin(), s.coeffs.end());
  RealBuffer out(s.grid.size());
  fft::c2r(s.grid.dim(), s.grid.n(), work.data(), out.data());
  return ScalarField(s.grid, std::vector<double>(out.begin(), out.end()), std::move(label));
}

ScalarField spectral_derivative(const ScalarField &u, int ax, int ay) {
  if (ax < 0 || ay < 0) throw Error("spectral_derivative: negative order");
  if (u.grid.dim() == 1 && ay != 0) throw Error("spectral_derivative: y-derivative of a 1-D field");
  const double two_pi = 2.0 * std::numbers::pi;
  const bool odd = (ax % 2) == 1 || (ay % 2) == 1;
  auto ipow = [](cplx z, int p) {
    cplx r = 1.0;
    for (int i = 0; i < p; ++i) r *= z;
    return r;
  };
  return apply_multiplier(
      u,
      [&](int kx, int ky) {
        return ipow(cplx(0.0, two_pi * kx), ax) * ipow(cplx(0.0, two_pi * ky), ay);
      },
      odd);
}

ScalarField fourier_upsample(const ScalarField &u, int n_new) {
  const int n = u.grid.n();
  if (n_new < n) throw Error("fourier_upsample: target grid is coarser than the source");
  if (n_new == n) return u;
  TorusGrid g2(u.grid.dim(), n_new);
  Spectrum src = forward(u);
  Spectrum dst(g2);
  // Nyquist bins are split evenly between +n/2 and -n/2 so the interpolant
  // stays real and symmetric.
  if (u.grid.dim() == 1) {
    for (int jx = 0; jx <= n / 2; ++jx) {
      cplx c = src.at(jx, 0);
      if (jx == n / 2) c *= 0.5;
      dst.at(jx, 0) = c;
    }
  } else {
    for (int jy = 0; jy < n; ++jy) {
      const int ky = frequency(jy, n);
      for (int jx = 0; jx <= n / 2; ++jx) {
        cplx c = src.at(jx, jy);
        if (jx == n / 2) c *= 0.5;
        if (jy == n / 2) {
          c *= 0.5;
          dst.at(jx, n / 2) += c;                      // +n/2
          dst.at(jx, n_new - n / 2) += c;              // -n/2
        } else {
          const int jy2 = ky >= 0 ? ky : n_new + ky;
          dst.at(jx, jy2) += c;
        }
      }
    }
  }
  ScalarField out = inverse(dst, u.label);
  out.h = u.h;
  return out;
}

FourierSeries::FourierSeries(const ScalarField &u, double drop) : dim_(u.grid.dim()) {
  Spectrum s = forward(u);
  const int n = u.grid.n();
  double cmax = 0.0;
  for (const auto &c : s.coeffs) cmax = std::max(cmax, std::abs(c));
  for (int jy = 0; jy < s.rows(); ++jy) {
    const int ky = dim_ == 2 ? frequency(jy, n) : 0;
    for (int jx = 0; jx < s.half(); ++jx) {
      const cplx c = s.at(jx, jy);
      if (std::abs(c) <= drop * cmax) continue;
      const double w = (jx == 0 || jx == n / 2) ? 1.0 : 2.0;
      modes_.push_back({jx, ky, w * c});
    }
  }
}

double FourierSeries::value(const Point &p) const {
  const double two_pi = 2.0 * std::numbers::pi;
  double v = 0.0;
  for (const auto &m : modes_) {
    const double th = two_pi * (m.kx * p[0] + m.ky * p[1]);
    v += m.c.real() * std::cos(th) - m.c.imag() * std::sin(th);
  }
  return v;
}

void FourierSeries::value_gradient(const Point &p, double &v, Point &grad) const {
  const double two_pi = 2.0 * std::numbers::pi;
  v = 0.0;
  grad = {0.0, 0.0};
  for (const auto &m : modes_) {
    const double th = two_pi * (m.kx * p[0] + m.ky * p[1]);
    const double cs = std::cos(th), sn = std::sin(th);
    v += m.c.real() * cs - m.c.imag() * sn;
    // d/dth Re(c e^{i th}) = -Re(c) sin - Im(c) cos
    const double d = -m.c.real() * sn - m.c.imag() * cs;
    grad[0] += d * two_pi * m.kx;
    grad[1] += d * two_pi * m.ky;
  }
}

} // namespace semilab
