#pragma once

#include <array>
#include <string>
#include <vector>

#include "semilab/fbi.hpp"
#include "semilab/grid.hpp"

namespace semilab {

/// Spectral coefficients under this fraction of the largest are treated as
/// roundoff by cauchy_fit and continuation_growth.
inline constexpr double kContinuationFloor = 1e-13;

struct MultiIndex {
  std::array<int, 2> a{0, 0};
  int order() const { return a[0] + a[1]; }
  bool operator==(const MultiIndex &) const = default;
};

/// All multi-indices with 1 <= |alpha| <= max_order, ordered by |alpha| then
/// by the x-component descending.
std::vector<MultiIndex> multi_indices(int dim, int max_order);

/// Real field w with (hD)^alpha u = (-i)^{|alpha|} w, i.e. w = h^{|alpha|}
/// d^alpha u, by the Fourier multiplier prod_j (2 pi i h k_j)^{alpha_j}.
/// Nyquist bins are cleared for |alpha| >= 1, as are coefficients at or under
/// floor * max |u_k|. Throws when (2 pi h k_Nyquist)^{|alpha|} would leave
/// double range.
ScalarField hd_derivative(const ScalarField &u, const MultiIndex &alpha, double h, double floor = 0.0);

struct CauchyRow {
  MultiIndex alpha;
  double M = 0.0; // ||(hD)^alpha u||_inf / ||u||_inf
};

struct CauchyReport {
  double h = 0.0;
  std::vector<CauchyRow> table;
  /// max_alpha M^{1/|alpha|} / (1 + h |alpha|)
  double C_est = 0.0;
  MultiIndex argmax;
  bool zero_field = false;
};

inline constexpr int kCauchyOrder1D = 20;
inline constexpr int kCauchyOrder2D = 12;

/// M(alpha) for every 1 <= |alpha| <= alpha_max, on u with sub-floor
/// coefficients removed; sup norms over the full grid.
CauchyReport cauchy_fit(const ScalarField &u, double h, int alpha_max);

struct GrowthReport {
  double h = 0.0;
  double sup_norm = 0.0;
  /// Largest |k| with |u_k| > kContinuationFloor * max |u_k|.
  double k_eff = 0.0;
  /// Admissible |t| <= 0.5 h ln(1/eps) / (2 pi k_eff).
  double t_limit = 0.0;
  std::vector<double> t_list;   // accepted strip half-widths
  std::vector<double> M;        // sup |u(x + i t e_j)| over x and axes j
  std::vector<double> t_dropped;
  std::vector<std::string> flags;
  /// ln(M/||u||_inf) ~ intercept + C_growth t / h
  double C_growth = 0.0;
  double r2 = 0.0;
  bool zero_field = false;
};

GrowthReport continuation_growth(const ScalarField &u, double h, const std::vector<double> &t_list);

/// The t_limit continuation_growth would use for u.
double continuation_limit(const ScalarField &u, double h);

/// A constant counts as bounded across a sweep if no entry exceeds this
/// multiple of its value at the largest h.
inline constexpr double kBoundedSpread = 2.0;

struct EquivalenceSummary {
  double delta = 0.0;
  std::vector<double> h;
  std::vector<double> C_est;
  std::vector<double> C_growth;
  bool decay_ok = false;
  bool cauchy_bounded = false;
  bool growth_bounded = false;
  /// All three agree (either all hold or all fail).
  bool consistent = false;
  /// All three hold.
  bool pass = false;
  std::vector<std::string> lines;
};

/// Reads the three measured conditions side by side. The Cauchy and growth
/// reports must carry the same h values, strictly decreasing.
EquivalenceSummary equivalence_crosscheck(const DecayReport &decay, const std::vector<CauchyReport> &cauchy,
                                          const std::vector<GrowthReport> &growth);

} // namespace semilab
