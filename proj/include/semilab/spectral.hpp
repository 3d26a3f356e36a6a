#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include "semilab/grid.hpp"

namespace semilab {

using cplx = std::complex<double>;

void *fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void *p);

template <class T> struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U> FftwAllocator(const FftwAllocator<U> &) {}
  T *allocate(std::size_t n) { return static_cast<T *>(fftw_aligned_alloc(n * sizeof(T))); }
  void deallocate(T *p, std::size_t) { fftw_aligned_free(p); }
  template <class U> bool operator==(const FftwAllocator<U> &) const { return true; }
  template <class U> bool operator!=(const FftwAllocator<U> &) const { return false; }
};

using RealBuffer = std::vector<double, FftwAllocator<double>>;
using ComplexBuffer = std::vector<cplx, FftwAllocator<cplx>>;

/// Signed integer frequency of FFT bin j on an n-point axis, in [-n/2, n/2).
inline int frequency(int j, int n) { return j < n / 2 ? j : j - n; }

/// Unnormalized transforms backed by cached FFTW plans. Safe to call from
/// several threads at once: plans are created under a lock and executed
/// with caller-owned buffers.
namespace fft {
/// Real -> half-complex. `in` has n^dim entries, `out` n^(dim-1)*(n/2+1).
void r2c(int dim, int n, const double *in, cplx *out);
/// Half-complex -> real. Destroys `in`.
void c2r(int dim, int n, cplx *in, double *out);
/// Complex -> complex; sign -1 forward, +1 backward.
void c2c(int dim, int n, cplx *in, cplx *out, int sign);
} // namespace fft

/// Half spectrum of a real field with coefficients normalized so that
/// u(x) = sum_k c_k exp(2 pi i k.x). Layout: row ky (0..n-1, or a single row
/// in 1-D), column kx in [0, n/2].
struct Spectrum {
  TorusGrid grid;
  ComplexBuffer coeffs;

  explicit Spectrum(TorusGrid g);
  int half() const { return grid.n() / 2 + 1; }
  int rows() const { return grid.dim() == 2 ? grid.n() : 1; }
  cplx &at(int jx, int jy) { return coeffs[static_cast<std::size_t>(jy) * half() + jx]; }
  const cplx &at(int jx, int jy) const { return coeffs[static_cast<std::size_t>(jy) * half() + jx]; }
  /// Coefficient of the integer frequency (kx, ky), using conjugate
  /// symmetry for kx < 0.
  cplx coefficient(int kx, int ky) const;
};

Spectrum forward(const ScalarField &u);
ScalarField inverse(const Spectrum &s, std::string label = {});

/// Multiplies the spectrum by m(kx, ky) and transforms back. When
/// `zero_nyquist` is set, bins with |k| = n/2 on any axis are cleared; odd
/// derivatives need this to stay real.
template <class M>
ScalarField apply_multiplier(const ScalarField &u, M &&m, bool zero_nyquist = false) {
  Spectrum s = forward(u);
  const int n = u.grid.n();
  for (int jy = 0; jy < s.rows(); ++jy) {
    const int ky = u.grid.dim() == 2 ? frequency(jy, n) : 0;
    for (int jx = 0; jx < s.half(); ++jx) {
      const bool nyq = jx == n / 2 || (u.grid.dim() == 2 && jy == n / 2);
      if (zero_nyquist && nyq)
        s.at(jx, jy) = 0.0;
      else
        s.at(jx, jy) *= m(jx, ky);
    }
  }
  return inverse(s, u.label);
}

/// Real partial derivative d^ax/dx^ax d^ay/dy^ay by Fourier multiplier.
ScalarField spectral_derivative(const ScalarField &u, int ax, int ay = 0);

/// Band-limited interpolation onto a finer (or equal) grid.
ScalarField fourier_upsample(const ScalarField &u, int n_new);

/// Evaluates the trigonometric interpolant of a grid field (and its
/// gradient) at arbitrary points. Coefficients below `drop` relative to
/// the largest are discarded.
class FourierSeries {
public:
  explicit FourierSeries(const ScalarField &u, double drop = 1e-17);
  int dim() const { return dim_; }
  double value(const Point &p) const;
  /// value and gradient in one pass.
  void value_gradient(const Point &p, double &v, Point &grad) const;
  std::size_t mode_count() const { return modes_.size(); }

private:
  struct Mode {
    int kx, ky;
    cplx c; // already doubled for kx > 0 (conjugate partner folded in)
  };
  int dim_;
  std::vector<Mode> modes_;
};

} // namespace semilab
