#pragma once

#include <array>
#include <string>
#include <vector>

#include "semilab/grid.hpp"
#include "semilab/spectral.hpp"

namespace semilab {

/// phi = tau exp(mu psi) with psi = A - |x - center| on the shell
/// r_inner <= |x - center| <= R_outer. Inside r_inner psi is the quintic
/// cap A - 3r/5 - r^4/r_in^3 + 3 r^5/(5 r_in^4), which matches value, slope
/// and curvature at r_inner and is flat to third order at the center.
/// Displacements are periodic, so the shell must fit in the fundamental
/// domain (R_outer < 1/2).
struct CarlemanWeight {
  double tau = 1.0;
  double mu = 1.0;
  double A = 2.0;
  double r_inner = 0.3;
  double R_outer = 0.45;
  Point center{0.5, 0.5};
  int dim = 2;
};

/// Rejects tau < 1, mu < 1, A < 1 + R_outer, bad radii, dim outside {1, 2}.
void validate(const CarlemanWeight &w);

/// Radial profile psi(r) for r >= 0, cap included.
double psi_profile(const CarlemanWeight &w, double r);

using Mat2 = std::array<std::array<double, 2>, 2>;

struct WeightJet {
  double psi = 0.0;
  double phi = 0.0;
  Point grad{0.0, 0.0}; // d phi
  Mat2 hess{};          // d^2 phi
  Point dpsi{0.0, 0.0};
  Mat2 d2psi{};
};

/// Closed forms on the shell. Throws at the center; points off the closed
/// shell are rejected (tolerance 1e-12).
WeightJet weight_eval(const CarlemanWeight &w, const Point &x);

struct ConjugatedSymbolValue {
  double re = 0.0; // |xi|^2 - |d phi|^2 + V - E
  double im = 0.0; // 2 <xi, d phi>
  double bracket = 0.0;
  bool has_bracket = false;
};

ConjugatedSymbolValue conjugated_symbol(const CarlemanWeight &w, const Point &x, const Point &xi, double V, double E);

/// Flat-metric (i/2){p_phi, conj p_phi}; the metric-derivative terms of the
/// general expansion vanish identically here.
double bracket_eval(const CarlemanWeight &w, const Point &x, const Point &xi, const Point &dV);
/// V and its gradient from the trigonometric interpolant of a grid field.
double bracket_eval(const CarlemanWeight &w, const Point &x, const Point &xi, const FourierSeries &V);

/// Symbol and bracket together.
ConjugatedSymbolValue symbol_with_bracket(const CarlemanWeight &w, const Point &x, const Point &xi,
                                          const FourierSeries &V, double E);

/// |p_phi| < tol * (1 + |xi|^2 + |d phi|^2) marks a characteristic sample.
inline constexpr double kDefaultTolChar = 1e-3;

struct ScanResolution {
  int radii = 24;       // shell radii, endpoints included
  int angles = 64;      // x angles around the center (2-D)
  int xi_angles = 16;   // xi directions per x, in the frame (x-hat, x-hat perp)
  double xi_step = 5e-4; // relative spacing of the log-spaced xi magnitudes
};

struct HypoScan {
  double min_bracket = 0.0;
  /// min over characteristic samples of bracket / (4 tau^3 mu^4 e^{3 mu psi})
  double min_normalized = 0.0;
  Point argmin_x{0.0, 0.0};
  Point argmin_xi{0.0, 0.0};
  std::size_t samples = 0;   // characteristic samples
  std::size_t scanned = 0;
  double xi_scan = 0.0;      // 2 tau mu e^{mu A}
  std::vector<std::string> flags;
};

/// Scans (x, xi) over the shell and |xi| <= 2 tau mu e^{mu A}; the xi
/// magnitudes are restricted to the band where characteristic points can
/// occur at all. Throws if no characteristic sample is found.
HypoScan hypoellipticity_scan(const CarlemanWeight &w, const FourierSeries &V, double E,
                              double tol_char = kDefaultTolChar, const ScanResolution &res = {});

struct MuSweep {
  std::vector<double> mu;
  std::vector<HypoScan> scans;
  /// Smallest tested mu from which every larger tested mu has a positive
  /// minimum; NaN if the largest fails.
  double mu0 = 0.0;
  /// min_normalized strictly increasing along the ladder.
  bool normalized_increasing = false;
};

MuSweep mu_sweep(const CarlemanWeight &base, const FourierSeries &V, double E, const std::vector<double> &mus,
                 double tol_char = kDefaultTolChar, const ScanResolution &res = {});

} // namespace semilab
