#pragma once

#include <vector>

#include "semilab/grid.hpp"

namespace semilab {

/// One Gaussian term amp * exp(-width |x - center|^2).
struct Bump {
  double amplitude = 0.0;
  double width = 1.0;
  Point center{0.0, 0.0};
};

/// Periodized sum of Gaussian bumps. `periodization_radius` is the cap on
/// the lattice-shift radius K; the radius each bump actually needs is
/// computed from its width.
struct PotentialSpec {
  std::vector<Bump> bumps;
  int periodization_radius = 10;
};

/// Dropped periodization tail is below kTailTolerance * |amplitude|.
inline constexpr double kTailTolerance = 1e-12;

/// Smallest K such that the lattice terms outside [-K,K]^dim of a bump
/// with this width sum to < kTailTolerance (relative), for any evaluation
/// point in [0,1)^dim and center in [-1,1)^dim.
int required_periodization_radius(double width, int dim);

void validate(const PotentialSpec &spec, int dim);

/// V(x) = sum_bumps sum_{m in [-K,K]^dim} amp exp(-width |x - c - m|^2).
double potential_at(const PotentialSpec &spec, const Point &x, int dim);

ScalarField potential_eval(const PotentialSpec &spec, const TorusGrid &grid);

/// Three bumps on [0,1]^2; the second variant turns the third bump into a well.
PotentialSpec three_bump_potential();
PotentialSpec bumps_and_well_potential();

} // namespace semilab
