#pragma once

#include <span>

namespace semilab {

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Throws if fewer than two points or all x equal. r2 is 1 when the data are
/// exactly collinear (including constant y).
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

} // namespace semilab
